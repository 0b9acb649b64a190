#include "cwnn/datasets.hpp"

#include "cwnn/error.hpp"
#include "cwnn/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace cwnn {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

Dataset with_rows(std::size_t n, std::size_t d, DatasetMeta meta) {
    Dataset ds;
    ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    ds.y.resize(static_cast<Eigen::Index>(n));
    ds.meta = std::move(meta);
    return ds;
}

DatasetMeta example1_meta(const std::string& source, const std::string& variant,
                          std::uint64_t seed) {
    DatasetMeta m;
    m.source = source;
    m.variant = variant;
    m.seed = seed;
    m.rng = std::string(Rng::name());
    m.feature_names = {"x1", "x2"};
    return m;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\"");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ','))
        out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

}  // namespace

Dataset Dataset::slice(std::size_t first, std::size_t count) const {
    if (first + count > size())
        throw ContractError("Dataset::slice: range exceeds dataset");
    Dataset out;
    out.x = x.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
    out.y = y.segment(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
    out.meta = meta;
    return out;
}

std::string to_string(Example1Variant v) {
    switch (v) {
    case Example1Variant::D1:
        return "D1";
    case Example1Variant::D2:
        return "D2";
    case Example1Variant::D3:
        return "D3";
    }
    return "?";
}

Example1Variant example1_variant_from_string(const std::string& s) {
    if (s == "D1" || s == "d1")
        return Example1Variant::D1;
    if (s == "D2" || s == "d2")
        return Example1Variant::D2;
    if (s == "D3" || s == "d3")
        return Example1Variant::D3;
    throw ContractError("unknown example-1 variant '" + s + "'");
}

double example1_target(double x1, double x2) {
    return 0.5 + x1 + x2 + std::sin(2.0 * kPi * (x1 + x2));
}

double example1_noise_sigma(Example1Variant v, double x1) {
    switch (v) {
    case Example1Variant::D1:
        return 0.0;
    case Example1Variant::D2:
        return 0.1 * (1.0 - x1 * x1);
    case Example1Variant::D3:
        return 0.2 * (1.0 - x1 * x1);
    }
    return 0.0;
}

Dataset gen_example1(Example1Variant variant, std::size_t n, std::uint64_t seed) {
    if (n == 0)
        throw ContractError("gen_example1: n must be at least 1");
    auto meta = example1_meta("example1", to_string(variant), seed);
    if (variant != Example1Variant::D1) {
        meta.noise.model = "gaussian";
        meta.noise.scale = variant == Example1Variant::D2 ? 0.1 : 0.2;
        meta.noise.sigma = "scale*(1-x1^2)";
    }
    Dataset ds = with_rows(n, 2, std::move(meta));
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = rng.uniform();
        const auto r = static_cast<Eigen::Index>(i);
        ds.x(r, 0) = x1;
        ds.x(r, 1) = std::sqrt(x1);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        double y = example1_target(ds.x(r, 0), ds.x(r, 1));
        const double sd = example1_noise_sigma(variant, ds.x(r, 0));
        if (variant != Example1Variant::D1)
            y += sd * rng.normal();
        ds.y(r) = y;
    }
    return ds;
}

std::pair<Dataset, Dataset> gen_example2_regions(std::size_t n_per_region, std::uint64_t seed) {
    if (n_per_region == 0)
        throw ContractError("gen_example2_regions: need at least one sample per region");
    Rng rng(seed);
    auto region = [&](const std::string& name, double lo, double hi) {
        Dataset ds = with_rows(n_per_region, 2, example1_meta("example2", name, seed));
        for (std::size_t i = 0; i < n_per_region; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const double x1 = rng.uniform(lo, hi);
            ds.x(r, 0) = x1;
            ds.x(r, 1) = std::sqrt(x1);
            ds.y(r) = example1_target(x1, ds.x(r, 1));
        }
        return ds;
    };
    Dataset a = region("DS1", 0.0, 0.6);
    Dataset b = region("DS2", 0.6, 1.0);
    return {std::move(a), std::move(b)};
}

double autoregression_step(double y1, double y2, bool switched) {
    const double s = kPi * (y1 * y1 + y2 * y2);
    double v = std::sqrt(std::atan(s));
    if (switched)
        v += std::cos(s);
    return v;
}

Dataset gen_autoregression(std::size_t length, std::uint64_t seed,
                           std::optional<std::size_t> switch_at, double noise_sd) {
    if (length < 3)
        throw ContractError("gen_autoregression: length must be at least 3");
    if (!(noise_sd >= 0.0))
        throw ContractError("gen_autoregression: noise_sd must be non-negative");
    DatasetMeta meta;
    meta.source = "autoregression";
    meta.variant = switch_at ? "switched" : "plain";
    meta.seed = seed;
    meta.rng = std::string(Rng::name());
    meta.feature_names = {"y_lag1", "y_lag2"};
    meta.target_name = "y";
    meta.switch_at = switch_at;
    if (noise_sd > 0.0) {
        meta.noise.model = "gaussian";
        meta.noise.sigma = "scale";
        meta.noise.scale = noise_sd;
    }
    const std::size_t rows = length - 2;
    Dataset ds = with_rows(rows, 2, std::move(meta));
    Rng rng(seed);
    double prev2 = 1.0, prev1 = 1.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const bool sw = switch_at && i >= *switch_at;
        double y = autoregression_step(prev1, prev2, sw);
        if (noise_sd > 0.0)
            y += noise_sd * rng.normal();
        const auto r = static_cast<Eigen::Index>(i);
        ds.x(r, 0) = prev1;
        ds.x(r, 1) = prev2;
        ds.y(r) = y;
        prev2 = prev1;
        prev1 = y;
    }
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column,
                 const std::vector<std::string>& feature_columns) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line))
        throw DataError("'" + path.string() + "' is empty");
    const auto header = split_line(line);
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw DataError("'" + path.string() + "': missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t target = column(target_column);
    std::vector<std::size_t> features;
    std::vector<std::string> names;
    if (feature_columns.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (i != target) {
                features.push_back(i);
                names.push_back(header[i]);
            }
    } else {
        for (const auto& f : feature_columns) {
            features.push_back(column(f));
            names.push_back(f);
        }
    }
    if (features.empty())
        throw DataError("'" + path.string() + "': no feature columns");

    std::vector<double> xs, ys;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty())
            continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            std::ostringstream msg;
            msg << "'" << path.string() << "' row " << row << ": expected " << header.size()
                << " cells, got " << cells.size();
            throw DataError(msg.str());
        }
        auto number = [&](std::size_t c) {
            const std::string& s = cells[c];
            double v = 0.0;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() ||
                !std::isfinite(v)) {
                std::ostringstream msg;
                msg << "'" << path.string() << "' row " << row << ", column '" << header[c]
                    << "': non-numeric cell '" << s << "'";
                throw DataError(msg.str());
            }
            return v;
        };
        for (std::size_t f : features)
            xs.push_back(number(f));
        ys.push_back(number(target));
    }
    if (ys.empty())
        throw DataError("'" + path.string() + "' has no data rows");

    DatasetMeta meta;
    meta.source = "csv";
    meta.variant = path.filename().string();
    meta.feature_names = std::move(names);
    meta.target_name = target_column;
    Dataset ds = with_rows(ys.size(), features.size(), std::move(meta));
    std::copy(xs.begin(), xs.end(), ds.x.data());
    std::copy(ys.begin(), ys.end(), ds.y.data());
    return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write '" + path.string() + "'");
    out.precision(17);
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        const std::string name =
            j < ds.meta.feature_names.size() ? ds.meta.feature_names[j] : "x" + std::to_string(j + 1);
        out << name << ',';
    }
    out << ds.meta.target_name << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.row(i))
            out << v << ',';
        out << ds.y(static_cast<Eigen::Index>(i)) << '\n';
    }
}

Dataset minmax_scale(const Dataset& ds, bool scale_target) {
    if (ds.empty())
        throw DataError("minmax_scale: dataset is empty");
    Dataset out = ds;
    out.meta.feature_scaling.clear();
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
        const double lo = ds.x.col(j).minCoeff();
        const double hi = ds.x.col(j).maxCoeff();
        const auto uj = static_cast<std::size_t>(j);
        const std::string name =
            uj < ds.meta.feature_names.size() ? ds.meta.feature_names[uj] : "x" + std::to_string(j + 1);
        if (!(hi > lo))
            throw DataError("minmax_scale: column '" + name + "' is constant");
        out.x.col(j) = (ds.x.col(j).array() - lo) / (hi - lo);
        out.meta.feature_scaling.push_back({name, lo, hi});
    }
    if (scale_target) {
        const double lo = ds.y.minCoeff(), hi = ds.y.maxCoeff();
        if (!(hi > lo))
            throw DataError("minmax_scale: target column '" + ds.meta.target_name + "' is constant");
        out.y = (ds.y.array() - lo) / (hi - lo);
        out.meta.target_scaling = ColumnScale{ds.meta.target_name, lo, hi};
    }
    return out;
}

Dataset apply_scaling(const Dataset& ds, const DatasetMeta& reference) {
    if (reference.feature_scaling.size() != ds.dim())
        throw ContractError("apply_scaling: reference has a different column count");
    Dataset out = ds;
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
        const auto& s = reference.feature_scaling[static_cast<std::size_t>(j)];
        out.x.col(j) = (ds.x.col(j).array() - s.min) / (s.max - s.min);
    }
    if (reference.target_scaling) {
        const auto& s = *reference.target_scaling;
        out.y = (ds.y.array() - s.min) / (s.max - s.min);
    }
    out.meta.feature_scaling = reference.feature_scaling;
    out.meta.target_scaling = reference.target_scaling;
    return out;
}

Dataset minmax_unscale(const Dataset& ds) {
    Dataset out = ds;
    for (std::size_t j = 0; j < ds.meta.feature_scaling.size(); ++j) {
        const auto& s = ds.meta.feature_scaling[j];
        const auto c = static_cast<Eigen::Index>(j);
        out.x.col(c) = ds.x.col(c).array() * (s.max - s.min) + s.min;
    }
    if (ds.meta.target_scaling) {
        const auto& s = *ds.meta.target_scaling;
        out.y = ds.y.array() * (s.max - s.min) + s.min;
    }
    out.meta.feature_scaling.clear();
    out.meta.target_scaling.reset();
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ContractError("split: train_fraction must lie in (0, 1)");
    const std::size_t n = ds.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.below(i)]);
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
    auto take = [&](std::size_t first, std::size_t last) {
        std::vector<std::size_t> part(idx.begin() + static_cast<std::ptrdiff_t>(first),
                                      idx.begin() + static_cast<std::ptrdiff_t>(last));
        std::sort(part.begin(), part.end());
        Dataset out = with_rows(part.size(), ds.dim(), ds.meta);
        for (std::size_t i = 0; i < part.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const auto s = static_cast<Eigen::Index>(part[i]);
            out.x.row(r) = ds.x.row(s);
            out.y(r) = ds.y(s);
        }
        return out;
    };
    return {take(0, n_train), take(n_train, n)};
}

std::pair<std::vector<double>, std::vector<double>> input_range(const Dataset& ds) {
    if (ds.empty())
        throw ContractError("input_range: dataset is empty");
    std::vector<double> lo(ds.dim()), hi(ds.dim());
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
        lo[static_cast<std::size_t>(j)] = ds.x.col(j).minCoeff();
        hi[static_cast<std::size_t>(j)] = ds.x.col(j).maxCoeff();
    }
    return {lo, hi};
}

namespace {

json scale_json(const ColumnScale& s) {
    return {{"name", s.name}, {"min", s.min}, {"max", s.max}};
}

ColumnScale scale_from(const json& j) {
    return {j.at("name").get<std::string>(), j.at("min").get<double>(), j.at("max").get<double>()};
}

}  // namespace

std::string meta_to_json(const DatasetMeta& m) {
    json j;
    j["source"] = m.source;
    j["variant"] = m.variant;
    j["seed"] = m.seed;
    j["rng"] = m.rng;
    j["noise"] = {{"model", m.noise.model}, {"sigma", m.noise.sigma}, {"scale", m.noise.scale}};
    j["features"] = m.feature_names;
    j["target"] = m.target_name;
    j["feature_scaling"] = json::array();
    for (const auto& s : m.feature_scaling)
        j["feature_scaling"].push_back(scale_json(s));
    j["target_scaling"] = m.target_scaling ? scale_json(*m.target_scaling) : json(nullptr);
    j["switch_at"] = m.switch_at ? json(*m.switch_at) : json(nullptr);
    return j.dump(2);
}

DatasetMeta meta_from_json(const std::string& text) {
    DatasetMeta m;
    try {
        const json j = json::parse(text);
        m.source = j.at("source").get<std::string>();
        m.variant = j.value("variant", "");
        m.seed = j.value("seed", std::uint64_t{0});
        m.rng = j.value("rng", "");
        if (j.contains("noise")) {
            const auto& n = j["noise"];
            m.noise.model = n.value("model", "none");
            m.noise.sigma = n.value("sigma", "");
            m.noise.scale = n.value("scale", 0.0);
        }
        m.feature_names = j.value("features", std::vector<std::string>{});
        m.target_name = j.value("target", "y");
        if (j.contains("feature_scaling"))
            for (const auto& s : j["feature_scaling"])
                m.feature_scaling.push_back(scale_from(s));
        if (j.contains("target_scaling") && !j["target_scaling"].is_null())
            m.target_scaling = scale_from(j["target_scaling"]);
        if (j.contains("switch_at") && !j["switch_at"].is_null())
            m.switch_at = j["switch_at"].get<std::size_t>();
    } catch (const json::exception& e) {
        throw DataError(std::string("dataset meta: ") + e.what());
    }
    return m;
}

void write_meta(const DatasetMeta& meta, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write '" + path.string() + "'");
    out << meta_to_json(meta) << '\n';
}

}  // namespace cwnn
