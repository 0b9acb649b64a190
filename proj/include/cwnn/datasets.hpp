#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cwnn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ColumnScale {
    std::string name;
    double min = 0.0;
    double max = 1.0;
};

struct NoiseSpec {
    std::string model = "none";  // "none", "gaussian"
    std::string sigma;           // human-readable sigma(x) rule
    double scale = 0.0;
};

struct DatasetMeta {
    std::string source;   // "example1", "example2", "autoregression", "csv", ...
    std::string variant;  // "D1", "DS1", ...
    std::uint64_t seed = 0;
    std::string rng;
    NoiseSpec noise;
    std::vector<std::string> feature_names;
    std::string target_name = "y";
    std::vector<ColumnScale> feature_scaling;  // empty unless minmax_scale ran
    std::optional<ColumnScale> target_scaling;
    std::optional<std::size_t> switch_at;  // first switched row (autoregression)
};

/// N x d inputs with one target per row.
struct Dataset {
    RowMatrix x;
    Eigen::VectorXd y;
    DatasetMeta meta;

    std::size_t size() const { return static_cast<std::size_t>(y.size()); }
    std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }
    bool empty() const { return y.size() == 0; }
    std::span<const double> row(std::size_t i) const {
        return {x.data() + i * dim(), dim()};
    }
    /// Rows [first, first + count).
    Dataset slice(std::size_t first, std::size_t count) const;
};

enum class Example1Variant { D1, D2, D3 };

std::string to_string(Example1Variant v);
Example1Variant example1_variant_from_string(const std::string& s);

/// Noiseless target 0.5 + x1 + x2 + sin(2 pi (x1 + x2)).
double example1_target(double x1, double x2);
double example1_noise_sigma(Example1Variant v, double x1);

/// x1 ~ U[0,1], x2 = sqrt(x1). All x are drawn before any noise.
Dataset gen_example1(Example1Variant variant, std::size_t n, std::uint64_t seed);

/// Noiseless example-1 samples with x1 in [0, 0.6] (DS1) and [0.6, 1] (DS2).
std::pair<Dataset, Dataset> gen_example2_regions(std::size_t n_per_region, std::uint64_t seed);

/// One step of the autoregression; `switched` adds cos(pi (a^2 + b^2)).
double autoregression_step(double y1, double y2, bool switched);

/// Series y_1 = y_2 = 1, y_t = f(y_{t-1}, y_{t-2}) + N(0, noise_sd^2). Row t-3
/// holds inputs (y_{t-1}, y_{t-2}) and target y_t, so `length` values give
/// length - 2 rows. Rows at index >= switch_at use the switched mapping.
Dataset gen_autoregression(std::size_t length, std::uint64_t seed,
                           std::optional<std::size_t> switch_at = std::nullopt,
                           double noise_sd = 0.01);

/// Numeric CSV with a header row. Empty feature list means every column
/// except the target.
Dataset load_csv(const std::filesystem::path& path, const std::string& target_column,
                 const std::vector<std::string>& feature_columns = {});
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// Per-column (v - min) / (max - min) on features and, if requested, the
/// target. Throws DataError on a constant column.
Dataset minmax_scale(const Dataset& ds, bool scale_target = false);
/// Applies the scaling recorded in `reference` to another set.
Dataset apply_scaling(const Dataset& ds, const DatasetMeta& reference);
Dataset minmax_unscale(const Dataset& ds);

/// Uniform random partition; train gets round(N * fraction) rows.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Per-column minimum and maximum of the inputs.
std::pair<std::vector<double>, std::vector<double>> input_range(const Dataset& ds);

std::string meta_to_json(const DatasetMeta& meta);
DatasetMeta meta_from_json(const std::string& text);
void write_meta(const DatasetMeta& meta, const std::filesystem::path& path);

}  // namespace cwnn
