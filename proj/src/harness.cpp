#include "fbs/harness.hpp"

#include "fbs/wavelet.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace fbs::harness {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg)
{
    throw Error(ErrorCode::Config, msg);
}

OctaveVector parse_octave(const json& j, const char* key)
{
    if (!j.is_array())
        config_error(std::string(key) + " must be an array of integers");
    OctaveVector o;
    for (const auto& v : j) {
        if (!v.is_number_integer())
            config_error(std::string(key) + " must be an array of integers");
        o.j.push_back(v.get<int>());
    }
    return o;
}

std::ofstream open_output(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out << std::setprecision(17);
    return out;
}

}  // namespace

bool ExperimentConfig::wants(estimator::Method m) const
{
    return std::find(estimators.begin(), estimators.end(), m) != estimators.end();
}

void ExperimentConfig::validate() const
{
    if (dimension < 1)
        config_error("dimension must be >= 1");
    if (hurst.size() != dimension)
        config_error("hurst must have `dimension` entries");
    if (dims.size() != dimension)
        config_error("dims must have `dimension` entries");
    for (double h : hurst)
        if (!(h > 0.0 && h < 1.0))
            config_error("hurst entries must lie in (0,1)");
    if (replicates < 1)
        config_error("replicates must be >= 1");
    if (wavelet_order < 2 || wavelet_order > wavelet::kMaxDaubechiesOrder)
        config_error("wavelet_order must be in 2..10");
    if (estimators.empty())
        config_error("estimators must not be empty");
    for (auto m : estimators)
        if (m == estimator::Method::Gls)
            config_error("estimators may only contain ols and two_step");
    for (std::size_t t : dims)
        if (t < 3)
            config_error("dims entries must be >= 3");
    if (octave_low && octave_low->size() != dimension)
        config_error("octave_low must have `dimension` entries");
    if (octave_high && octave_high->size() != dimension)
        config_error("octave_high must have `dimension` entries");

    try {
        const auto box = octaves();
        const auto& filter = wavelet::daubechies(wavelet_order);
        for (const auto& o : box)
            wavelet::validate_octave(o, dims, filter);
        if (box.size() < dimension + 1)
            config_error("octave box has fewer than d+1 octaves");
        for (std::size_t i = 0; i < dimension; ++i) {
            bool varies = false;
            for (const auto& o : box)
                varies |= o[i] != box.front()[i];
            if (!varies)
                config_error("octave box must span at least two octaves on axis " + std::to_string(i));
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Config)
            throw;
        config_error(std::string("octave box incompatible with dims: ") + e.what());
    }
}

std::vector<OctaveVector> ExperimentConfig::octaves() const
{
    const auto& filter = wavelet::daubechies(wavelet_order);
    OctaveVector low, high;
    if (octave_low && octave_high) {
        low = *octave_low;
        high = *octave_high;
    } else {
        const int base = octave_low ? octave_low->j.front() : estimator::kDefaultLowOctave;
        if (octave_low && std::any_of(octave_low->j.begin(), octave_low->j.end(), [&](int v) { return v != base; }))
            config_error("octave_high can only be automatic with a uniform octave_low");
        const auto range = estimator::default_octave_range(dims, filter, base);
        low = range.low;
        high = octave_high ? *octave_high : range.high;
    }
    return wavelet::octave_box(low, high);
}

ExperimentConfig ExperimentConfig::parse(std::string_view json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        config_error(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object())
        config_error("configuration must be a JSON object");

    static const std::set<std::string> known{"dimension", "hurst",       "dims",          "replicates", "seed",
                                             "wavelet_order", "octave_low", "octave_high", "estimators",
                                             "cascade_depth", "lag_cap",    "summary_path", "raw_path"};
    for (const auto& [key, _] : doc.items())
        if (!known.count(key))
            config_error("unknown configuration key '" + key + "'");

    ExperimentConfig cfg;
    try {
        if (!doc.contains("hurst") || !doc.contains("dims"))
            config_error("configuration needs `hurst` and `dims`");
        cfg.hurst = doc.at("hurst").get<std::vector<double>>();
        cfg.dims = doc.at("dims").get<std::vector<std::size_t>>();
        cfg.dimension = doc.value("dimension", cfg.hurst.size());
        cfg.replicates = doc.value("replicates", std::size_t{1});
        cfg.seed = doc.value("seed", std::uint64_t{0});
        cfg.wavelet_order = doc.value("wavelet_order", 3);
        cfg.cascade_depth = doc.value("cascade_depth", 10);
        cfg.lag_cap = doc.value("lag_cap", 64);
        cfg.summary_path = doc.value("summary_path", std::string{});
        cfg.raw_path = doc.value("raw_path", std::string{});
        if (doc.contains("octave_low"))
            cfg.octave_low = parse_octave(doc.at("octave_low"), "octave_low");
        if (doc.contains("octave_high")) {
            const auto& hi = doc.at("octave_high");
            if (!(hi.is_string() && hi.get<std::string>() == "auto"))
                cfg.octave_high = parse_octave(hi, "octave_high");
        }
        if (doc.contains("estimators")) {
            cfg.estimators.clear();
            for (const auto& name : doc.at("estimators").get<std::vector<std::string>>()) {
                if (name == "ols")
                    cfg.estimators.push_back(estimator::Method::Ols);
                else if (name == "two_step")
                    cfg.estimators.push_back(estimator::Method::TwoStep);
                else
                    config_error("unknown estimator '" + name + "'");
            }
        }
    } catch (const json::exception& e) {
        config_error(std::string("bad configuration value: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Config, "cannot read configuration " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string ExperimentConfig::to_json() const
{
    json doc;
    doc["dimension"] = dimension;
    doc["hurst"] = hurst;
    doc["dims"] = dims;
    doc["replicates"] = replicates;
    doc["seed"] = seed;
    doc["wavelet_order"] = wavelet_order;
    if (octave_low)
        doc["octave_low"] = octave_low->j;
    doc["octave_high"] = octave_high ? json(octave_high->j) : json("auto");
    std::vector<std::string> names;
    for (auto m : estimators)
        names.emplace_back(estimator::to_string(m));
    doc["estimators"] = names;
    doc["cascade_depth"] = cascade_depth;
    doc["lag_cap"] = lag_cap;
    if (!summary_path.empty())
        doc["summary_path"] = summary_path;
    if (!raw_path.empty())
        doc["raw_path"] = raw_path;
    return doc.dump(2);
}

ExperimentConfig preset(std::string_view name)
{
    ExperimentConfig cfg;
    if (name == "2d") {
        cfg.dimension = 2;
        cfg.hurst = {0.8, 0.8};
        cfg.dims = {256, 256};
        cfg.replicates = 100;
    } else if (name == "3d") {
        cfg.dimension = 3;
        cfg.hurst = {0.6, 0.7, 0.8};
        cfg.dims = {64, 64, 64};
        cfg.replicates = 50;
        cfg.octave_low = OctaveVector{{2, 2, 2}};
        cfg.octave_high = OctaveVector{{3, 3, 3}};
    } else {
        config_error("unknown preset '" + std::string(name) + "' (expected 2d or 3d)");
    }
    cfg.validate();
    return cfg;
}

const SummaryRow& SummaryTable::at(estimator::Method method, std::size_t axis) const
{
    for (const auto& r : rows)
        if (r.method == method && r.axis == axis)
            return r;
    throw Error(ErrorCode::InvalidArgument, "no summary row for that estimator and axis");
}

bool SummaryTable::has(estimator::Method method) const
{
    return std::any_of(rows.begin(), rows.end(), [&](const SummaryRow& r) { return r.method == method; });
}

SummaryTable summarize(const std::vector<std::vector<double>>& estimates, const std::vector<double>& truth,
                       estimator::Method method)
{
    if (estimates.size() < 2)
        throw Error(ErrorCode::InsufficientReplicates, "summaries need at least two replicates");
    const std::size_t d = truth.size();
    const double r = static_cast<double>(estimates.size());
    SummaryTable table;
    for (std::size_t i = 0; i < d; ++i) {
        double sum = 0.0;
        for (const auto& row : estimates) {
            if (row.size() != d)
                throw Error(ErrorCode::DimensionMismatch, "estimate row has the wrong length");
            sum += row[i];
        }
        const double mean = sum / r;
        double ss = 0.0, se = 0.0;
        for (const auto& row : estimates) {
            ss += (row[i] - mean) * (row[i] - mean);
            se += (row[i] - truth[i]) * (row[i] - truth[i]);
        }
        SummaryRow out;
        out.method = method;
        out.axis = i;
        out.truth = truth[i];
        out.mean = mean;
        out.std = std::sqrt(ss / (r - 1.0));
        out.rmse = std::sqrt(se / r);
        out.replicates = estimates.size();
        table.rows.push_back(out);
    }
    return table;
}

void write_summary_csv(const SummaryTable& table, const std::filesystem::path& path)
{
    auto out = open_output(path);
    out << "# std: sample standard deviation (divisor R-1)\n"
        << "# rmse: sqrt(mean((H_hat-H)^2)) (divisor R); rmse^2 = bias^2 + std^2 (R-1)/R\n"
        << "estimator,axis,truth,mean,std,rmse,replicates,failures\n";
    for (const auto& r : table.rows)
        out << estimator::to_string(r.method) << ',' << r.axis + 1 << ',' << r.truth << ',' << r.mean << ','
            << r.std << ',' << r.rmse << ',' << r.replicates << ',' << table.failures << '\n';
    if (!out)
        throw Error(ErrorCode::Io, "failed writing " + path.string());
}

void logscale_export(const estimator::RegressionSystem& system, const estimator::EstimatorReport& report,
                     const std::filesystem::path& path)
{
    auto out = open_output(path);
    const std::size_t d = system.rank();
    for (std::size_t i = 0; i < d; ++i)
        out << "j_" << i + 1 << ',';
    out << "log2_S,fitted,residual,n_J\n";
    for (std::size_t l = 0; l < system.size(); ++l) {
        const auto row = static_cast<Eigen::Index>(l);
        for (std::size_t i = 0; i < d; ++i)
            out << system.octaves[l][i] << ',';
        out << system.logvars(row) << ',' << report.fitted(row) << ',' << report.residuals(row) << ','
            << system.count(l) << '\n';
    }
    if (!out)
        throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::string report_json(const estimator::RegressionSystem& system,
                        const std::vector<estimator::EstimatorReport>& reports, int wavelet_order)
{
    json doc;
    doc["wavelet_order"] = wavelet_order;
    json octaves = json::array();
    json logvars = json::array();
    json counts = json::array();
    for (std::size_t l = 0; l < system.size(); ++l) {
        octaves.push_back(system.octaves[l].j);
        logvars.push_back(system.logvars(static_cast<Eigen::Index>(l)));
        counts.push_back(system.count(l));
    }
    doc["octaves"] = octaves;
    doc["log2_S"] = logvars;
    doc["n_J"] = counts;

    json list = json::array();
    for (const auto& r : reports) {
        json item;
        item["method"] = estimator::to_string(r.method);
        item["hurst"] = r.hurst;
        item["intercept"] = r.intercept;
        item["out_of_range"] = r.out_of_range;
        json cov = json::array();
        for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < r.covariance.cols(); ++j)
                row.push_back(r.covariance(i, j));
            cov.push_back(row);
        }
        item["covariance"] = cov;
        item["residuals"] = std::vector<double>(r.residuals.data(), r.residuals.data() + r.residuals.size());
        list.push_back(item);
    }
    doc["reports"] = list;
    return doc.dump(2);
}

}  // namespace fbs::harness
