#include "fbs/covmodel.hpp"
#include "fbs/estimator.hpp"
#include "fbs/experiment.hpp"
#include "fbs/field_io.hpp"
#include "fbs/harness.hpp"
#include "fbs/rng.hpp"
#include "fbs/synthesis.hpp"
#include "fbs/wavelet.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

using namespace fbs;

struct OctaveArgs {
    std::vector<int> low;
    std::vector<int> high;
};

void add_octave_options(CLI::App* cmd, OctaveArgs& args)
{
    cmd->add_option("--octave-low", args.low, "lowest octave per axis (default 3)");
    cmd->add_option("--octave-high", args.high, "highest octave per axis (default: coarsest with an available coefficient)");
}

std::vector<OctaveVector> resolve_octaves(const OctaveArgs& args, const Shape& dims,
                                          const wavelet::WaveletFilter& filter)
{
    const std::size_t d = dims.size();
    auto check = [&](const std::vector<int>& v, const char* name) {
        if (!v.empty() && v.size() != d)
            throw Error(ErrorCode::Config, std::string(name) + " needs one value per axis");
    };
    check(args.low, "--octave-low");
    check(args.high, "--octave-high");
    int base = estimator::kDefaultLowOctave;
    if (!args.low.empty() && args.high.empty()) {
        base = args.low.front();
        for (int v : args.low)
            if (v != base)
                throw Error(ErrorCode::Config, "--octave-high is required when --octave-low differs across axes");
    }
    const auto range = estimator::default_octave_range(dims, filter, base);
    const OctaveVector low = args.low.empty() ? range.low : OctaveVector{args.low};
    const OctaveVector high = args.high.empty() ? range.high : OctaveVector{args.high};
    auto box = wavelet::octave_box(low, high);
    for (const auto& o : box)
        wavelet::validate_octave(o, dims, filter);
    return box;
}

covmodel::CovModelConfig model_config(const std::vector<OctaveVector>& octaves, const Shape& dims,
                                      const wavelet::WaveletFilter& filter, int depth, int lag_cap)
{
    covmodel::CovModelConfig mc;
    mc.cascade_depth = depth;
    mc.lag_cap = lag_cap;
    mc.octaves = octaves;
    for (const auto& o : octaves) {
        std::vector<std::size_t> n(o.size());
        for (std::size_t i = 0; i < o.size(); ++i)
            n[i] = wavelet::available_count(dims[i], o[i], filter);
        mc.counts.push_back(std::move(n));
    }
    return mc;
}

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
    out << text << '\n';
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hurst-vector estimation for fractional Brownian sheets"};
    app.require_subcommand(1);

    // synth
    std::vector<double> synth_hurst;
    std::vector<std::size_t> synth_dims;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    bool synth_noise = false;
    auto* synth = app.add_subcommand("synth", "simulate a fractional Brownian sheet");
    synth->add_option("--hurst", synth_hurst, "Hurst exponent per axis")->required();
    synth->add_option("--dims", synth_dims, "samples per axis")->required();
    synth->add_option("--seed", synth_seed, "random seed");
    synth->add_option("--out", synth_out, "output field file")->required();
    synth->add_flag("--noise", synth_noise, "write the stationary increment sheet instead");

    // estimate
    std::string est_in, est_out, est_logscale, est_method = "both";
    int est_order = 3, est_depth = 10, est_lag = 64;
    OctaveArgs est_oct;
    auto* est = app.add_subcommand("estimate", "estimate the Hurst vector of a field file");
    est->add_option("field", est_in, "input field file")->required();
    est->add_option("--out", est_out, "report JSON (default stdout)");
    est->add_option("--logscale", est_logscale, "log-scale diagram CSV");
    est->add_option("--method", est_method, "ols, two_step or both")
        ->check(CLI::IsMember({"ols", "two_step", "both"}));
    est->add_option("--order", est_order, "Daubechies order");
    est->add_option("--cascade-depth", est_depth, "covariance model cascade depth");
    est->add_option("--lag-cap", est_lag, "covariance model lag cap");
    add_octave_options(est, est_oct);

    // mc
    std::string mc_config, mc_preset, mc_out = ".";
    std::optional<std::uint64_t> mc_seed;
    std::optional<std::size_t> mc_reps;
    std::size_t mc_threads = std::max(1u, std::thread::hardware_concurrency());
    auto* mc = app.add_subcommand("mc", "run a Monte Carlo experiment");
    auto* cfg_opt = mc->add_option("--config", mc_config, "experiment JSON");
    mc->add_option("--preset", mc_preset, "2d or 3d")->excludes(cfg_opt);
    mc->add_option("--seed", mc_seed, "override the seed");
    mc->add_option("--replicates", mc_reps, "override the replicate count");
    mc->add_option("--threads", mc_threads, "worker threads");
    mc->add_option("--out", mc_out, "output directory for summary.csv and raw.csv");

    // gmatrix
    std::vector<double> g_hurst;
    std::vector<std::size_t> g_dims;
    int g_order = 3, g_depth = 10, g_lag = 64;
    std::string g_out;
    OctaveArgs g_oct;
    auto* gm = app.add_subcommand("gmatrix", "print the model covariance G(H) of the log-variances");
    gm->add_option("--hurst", g_hurst, "Hurst exponent per axis")->required();
    gm->add_option("--dims", g_dims, "samples per axis")->required();
    gm->add_option("--order", g_order, "Daubechies order");
    gm->add_option("--cascade-depth", g_depth, "cascade depth");
    gm->add_option("--lag-cap", g_lag, "lag cap");
    gm->add_option("--out", g_out, "CSV output (default stdout)");
    add_octave_options(gm, g_oct);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInput;
    }

    try {
        if (*synth) {
            HurstVector h(synth_hurst);
            if (synth_dims.size() != h.size())
                throw Error(ErrorCode::Config, "--dims and --hurst must have the same length");
            Field f;
            if (synth_noise) {
                f = synthesis::synth_fgn_sheet(h, synth_dims, synth_seed);
            } else {
                synthesis::FgnSheetSampler sampler(h, synthesis::noise_dims_for(synth_dims));
                f = synthesis::sample_fbs_pair(sampler, substream_key(synth_seed, 0)).first;
            }
            harness::save_field(f, synth_out);
        } else if (*est) {
            const Field field = harness::load_field(est_in);
            const auto& filter = wavelet::daubechies(est_order);
            const auto octaves = resolve_octaves(est_oct, field.dims(), filter);
            const auto system = estimator::build_system(field, filter, octaves);
            std::vector<estimator::EstimatorReport> reports;
            if (est_method == "ols") {
                reports.push_back(estimator::fit_ols(system));
            } else {
                covmodel::CovarianceModel model(filter, model_config(octaves, field.dims(), filter, est_depth, est_lag));
                auto res = covmodel::two_step_fit(system, model);
                if (est_method == "both")
                    reports.push_back(res.ols);
                reports.push_back(res.two_step);
            }
            write_text(est_out, harness::report_json(system, reports, est_order));
            if (!est_logscale.empty())
                harness::logscale_export(system, reports.back(), est_logscale);
        } else if (*mc) {
            if (mc_config.empty() == mc_preset.empty())
                throw Error(ErrorCode::Config, "mc needs exactly one of --config or --preset");
            auto cfg = mc_config.empty() ? harness::preset(mc_preset) : harness::ExperimentConfig::load(mc_config);
            if (mc_seed)
                cfg.seed = *mc_seed;
            if (mc_reps)
                cfg.replicates = *mc_reps;
            cfg.validate();
            harness::RunOptions opts;
            opts.threads = mc_threads;
            const auto result = harness::run_experiment(cfg, opts);
            const std::filesystem::path dir(mc_out);
            const auto summary = cfg.summary_path.empty() ? dir / "summary.csv" : std::filesystem::path(cfg.summary_path);
            const auto raw = cfg.raw_path.empty() ? dir / "raw.csv" : std::filesystem::path(cfg.raw_path);
            harness::write_raw_csv(result, raw);
            if (result.summary.rows.empty())
                throw Error(ErrorCode::InsufficientReplicates, "fewer than two replicates succeeded");
            harness::write_summary_csv(result.summary, summary);
            for (const auto& r : result.summary.rows)
                std::printf("%-8s H%zu truth %.3f mean %.4f std %.4f rmse %.4f (R=%zu)\n",
                            estimator::to_string(r.method), r.axis + 1, r.truth, r.mean, r.std, r.rmse, r.replicates);
            if (result.failures)
                std::printf("%zu replicates failed\n", result.failures);
        } else if (*gm) {
            HurstVector h(g_hurst);
            if (g_dims.size() != h.size())
                throw Error(ErrorCode::Config, "--dims and --hurst must have the same length");
            const auto& filter = wavelet::daubechies(g_order);
            const auto octaves = resolve_octaves(g_oct, g_dims, filter);
            covmodel::CovarianceModel model(filter, model_config(octaves, g_dims, filter, g_depth, g_lag));
            const auto g = model.g_matrix(h);
            std::ostringstream os;
            os << std::setprecision(17) << "octave";
            for (const auto& o : octaves)
                os << ",\"" << to_string(o) << '"';
            for (std::size_t r = 0; r < octaves.size(); ++r) {
                os << "\n\"" << to_string(octaves[r]) << '"';
                for (std::size_t c = 0; c < octaves.size(); ++c)
                    os << ',' << g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
            write_text(g_out, os.str());
        }
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return e.is_input_error() ? kExitInput : kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return 0;
}
