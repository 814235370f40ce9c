#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace abn {

enum class Distribution { binomial, gaussian, poisson };

std::string_view to_string(Distribution d);
/// Throws Error("UnknownDistribution").
Distribution parse_distribution(std::string_view s);

/// Column -> distribution assignment, plus an optional grouping column that
/// is carried as metadata only.
struct DistSpec {
    std::vector<std::pair<std::string, Distribution>> columns;  // file order of the config
    std::optional<std::string> group_var;

    /// key=value lines; `#` starts a comment; `group_var=<name>` is reserved.
    static DistSpec parse(std::string_view text);
    static DistSpec load(const std::filesystem::path& path);
    std::string canonical() const;
};

struct Standardization {
    double mean = 0;
    double sd = 1;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<std::string> names, std::vector<Distribution> dists,
            std::vector<Eigen::VectorXd> columns);

    std::size_t n_obs() const noexcept { return columns_.empty() ? 0 : columns_.front().size(); }
    std::size_t n_vars() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<Distribution>& dists() const noexcept { return dists_; }
    const Eigen::VectorXd& column(std::size_t j) const { return columns_.at(j); }
    const std::vector<Eigen::VectorXd>& columns() const noexcept { return columns_; }
    /// Throws Error("UnknownName").
    std::size_t index_of(std::string_view name) const;

    /// Present for gaussian columns after standardize().
    const std::vector<std::optional<Standardization>>& transforms() const noexcept { return transforms_; }
    /// Original labels of binomial columns (level coded 0, level coded 1).
    const std::map<std::string, std::pair<std::string, std::string>>& levels() const noexcept { return levels_; }
    const std::vector<std::string>& group() const noexcept { return group_; }
    const std::optional<std::string>& group_var() const noexcept { return group_var_; }
    /// Stable hash; for loaded data it covers file bytes and the dist spec.
    const std::string& fingerprint() const noexcept { return fingerprint_; }

    void set_fingerprint(std::string fp) { fingerprint_ = std::move(fp); }
    void set_levels(std::map<std::string, std::pair<std::string, std::string>> l) { levels_ = std::move(l); }
    void set_group(std::string var, std::vector<std::string> values);

    /// Checks binomial in {0,1}, poisson nonnegative integer, all finite.
    /// Throws Error("BadLevelCount"/"NegativeCount"/"NonFiniteData").
    void validate(bool require_two_levels) const;

    /// Fingerprint from the column values (for in-memory datasets).
    std::string content_fingerprint() const;

private:
    friend Dataset standardize(const Dataset&);
    std::vector<std::string> names_;
    std::vector<Distribution> dists_;
    std::vector<Eigen::VectorXd> columns_;
    std::vector<std::optional<Standardization>> transforms_;
    std::map<std::string, std::pair<std::string, std::string>> levels_;
    std::optional<std::string> group_var_;
    std::vector<std::string> group_;
    std::string fingerprint_;
};

/// Reads comma-separated text with a header. Errors: MissingColumn,
/// UnspecifiedColumn, BadLevelCount, NegativeCount, MissingValue, ParseError.
Dataset load_dataset(const std::filesystem::path& path, const DistSpec& spec);
Dataset load_dataset_text(std::string_view bytes, const DistSpec& spec);

/// Writes the format load_dataset reads (binomial as 0/1, 17 significant digits).
void write_dataset(std::ostream& out, const Dataset& ds);

/// Gaussian columns -> (x - mean) / sd (sample sd). Throws Error("ZeroVariance").
Dataset standardize(const Dataset& ds);

struct DesignMatrix {
    Eigen::VectorXd response;
    Eigen::MatrixXd predictors;          // column 0 is the intercept
    std::vector<std::string> labels;     // "(Intercept)", then parent names
};

/// Parents are placed in canonical (name) order. Throws Error("UnknownName"),
/// Error("SelfParent"), Error("DuplicateParent").
DesignMatrix build_design(const Dataset& ds, std::string_view child,
                          const std::vector<std::string>& parents);
/// Index form: parents given as a bitmask over dataset columns.
DesignMatrix build_design(const Dataset& ds, std::size_t child, std::uint64_t parent_mask);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace abn
