#include "fbs/experiment.hpp"

#include "fbs/covmodel.hpp"
#include "fbs/rng.hpp"
#include "fbs/synthesis.hpp"
#include "fbs/wavelet.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <thread>

namespace fbs::harness {

namespace {

void estimate_into(ReplicateRecord& rec, const Field& field, const ExperimentConfig& cfg,
                   const wavelet::WaveletFilter& filter, const std::vector<OctaveVector>& octaves,
                   const covmodel::CovarianceModel& model, const RunOptions& options)
{
    try {
        if (options.fault_hook)
            options.fault_hook(rec.index);
        const auto system = estimator::build_system(field, filter, octaves);
        if (cfg.wants(estimator::Method::TwoStep)) {
            const auto res = covmodel::two_step_fit(system, model);
            rec.ols = res.ols.hurst;
            rec.two_step = res.two_step.hurst;
        } else {
            rec.ols = estimator::fit_ols(system).hurst;
        }
        if (!cfg.wants(estimator::Method::Ols))
            rec.ols.clear();
    } catch (const Error& e) {
        rec.failed = true;
        rec.error = e.what();
        rec.ols.clear();
        rec.two_step.clear();
    }
}

}  // namespace

std::vector<std::vector<double>> ExperimentResult::estimates(estimator::Method method) const
{
    std::vector<std::vector<double>> out;
    for (const auto& r : raw) {
        if (r.failed)
            continue;
        const auto& v = method == estimator::Method::TwoStep ? r.two_step : r.ols;
        if (!v.empty())
            out.push_back(v);
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options)
{
    config.validate();
    const auto& filter = wavelet::daubechies(config.wavelet_order);
    const auto octaves = config.octaves();

    covmodel::CovModelConfig mc;
    mc.cascade_depth = config.cascade_depth;
    mc.lag_cap = config.lag_cap;
    mc.octaves = octaves;
    for (const auto& o : octaves) {
        std::vector<std::size_t> n(o.size());
        for (std::size_t i = 0; i < o.size(); ++i)
            n[i] = wavelet::available_count(config.dims[i], o[i], filter);
        mc.counts.push_back(std::move(n));
    }
    const covmodel::CovarianceModel model(filter, std::move(mc));
    const synthesis::FgnSheetSampler sampler(HurstVector(config.hurst), synthesis::noise_dims_for(config.dims));

    ExperimentResult result;
    result.config = config;
    result.raw.resize(config.replicates);
    for (std::size_t r = 0; r < config.replicates; ++r)
        result.raw[r].index = r;

    const std::size_t pairs = (config.replicates + 1) / 2;
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t p = next.fetch_add(1);
            if (p >= pairs)
                return;
            try {
                const auto [re, im] = synthesis::sample_fbs_pair(sampler, substream_key(config.seed, p));
                estimate_into(result.raw[2 * p], re, config, filter, octaves, model, options);
                if (2 * p + 1 < config.replicates)
                    estimate_into(result.raw[2 * p + 1], im, config, filter, octaves, model, options);
            } catch (...) {
                std::lock_guard lock(fatal_mutex);
                if (!fatal)
                    fatal = std::current_exception();
                next.store(pairs);
                return;
            }
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, pairs));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }
    if (fatal)
        std::rethrow_exception(fatal);

    for (const auto& r : result.raw)
        result.failures += r.failed ? 1 : 0;
    if (static_cast<double>(result.failures) > kMaxFailureFraction * static_cast<double>(config.replicates))
        throw Error(ErrorCode::TooManyFailures, std::to_string(result.failures) + " of " +
                                                    std::to_string(config.replicates) + " replicates failed");

    const std::size_t ok = config.replicates - result.failures;
    if (ok >= 2) {
        for (auto m : config.estimators) {
            auto part = summarize(result.estimates(m), config.hurst, m);
            result.summary.rows.insert(result.summary.rows.end(), part.rows.begin(), part.rows.end());
        }
    }
    result.summary.failures = result.failures;
    return result;
}

void write_raw_csv(const ExperimentResult& result, const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out << std::setprecision(17);
    const std::size_t d = result.config.dimension;
    out << "replicate,status";
    for (auto m : result.config.estimators)
        for (std::size_t i = 0; i < d; ++i)
            out << ',' << estimator::to_string(m) << '_' << i + 1;
    out << ",error\n";
    for (const auto& r : result.raw) {
        out << r.index << ',' << (r.failed ? "failed" : "ok");
        for (auto m : result.config.estimators) {
            const auto& v = m == estimator::Method::TwoStep ? r.two_step : r.ols;
            for (std::size_t i = 0; i < d; ++i) {
                out << ',';
                if (!r.failed && i < v.size())
                    out << v[i];
            }
        }
        out << ',';
        if (r.failed) {
            std::string msg = r.error;
            for (char& c : msg)
                if (c == ',' || c == '\n')
                    c = ';';
            out << msg;
        }
        out << '\n';
    }
    if (!out)
        throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace fbs::harness
