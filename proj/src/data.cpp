#include "abn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "abn/dag.hpp"
#include "abn/error.hpp"

namespace abn {

std::string_view to_string(Distribution d) {
    switch (d) {
    case Distribution::binomial: return "binomial";
    case Distribution::gaussian: return "gaussian";
    case Distribution::poisson: return "poisson";
    }
    return "?";
}

Distribution parse_distribution(std::string_view s) {
    if (s == "binomial") return Distribution::binomial;
    if (s == "gaussian") return Distribution::gaussian;
    if (s == "poisson") return Distribution::poisson;
    throw Error("UnknownDistribution", "unsupported distribution '" + std::string(s) + "'");
}

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(b, e - b + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    bool quoted = false;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i < line.size() && line[i] == '"') quoted = !quoted;
        if (i == line.size() || (line[i] == ',' && !quoted)) {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

std::optional<double> to_number(const std::string& s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "NaN" || s == "nan"; }

}  // namespace

DistSpec DistSpec::parse(std::string_view text) {
    DistSpec spec;
    std::istringstream in{std::string(text)};
    std::string line;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) throw Error("ParseError", "expected key=value, got '" + t + "'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key == "group_var") {
            spec.group_var = value;
            continue;
        }
        validate_node_name(key);
        if (!seen.insert(key).second) throw Error("ParseError", "column '" + key + "' listed twice");
        spec.columns.emplace_back(key, parse_distribution(value));
    }
    if (spec.columns.empty()) throw Error("ParseError", "distribution spec lists no columns");
    return spec;
}

DistSpec DistSpec::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IOError", "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string DistSpec::canonical() const {
    std::string out;
    for (const auto& [name, d] : columns) out += name + "=" + std::string(to_string(d)) + "\n";
    if (group_var) out += "group_var=" + *group_var + "\n";
    return out;
}

Dataset::Dataset(std::vector<std::string> names, std::vector<Distribution> dists,
                 std::vector<Eigen::VectorXd> columns)
    : names_(std::move(names)), dists_(std::move(dists)), columns_(std::move(columns)) {
    if (names_.size() != dists_.size() || names_.size() != columns_.size())
        throw Error("DimensionMismatch", "dataset names, distributions and columns differ in length");
    if (names_.size() > 64) throw Error("TooManyNodes", "at most 64 variables are supported");
    std::set<std::string> unique;
    for (const auto& n : names_) {
        validate_node_name(n);
        if (!unique.insert(n).second) throw Error("DuplicateName", "duplicate column '" + n + "'");
    }
    for (const auto& c : columns_)
        if (c.size() != columns_.front().size())
            throw Error("DimensionMismatch", "columns have different lengths");
    transforms_.assign(names_.size(), std::nullopt);
}

std::size_t Dataset::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    throw Error("UnknownName", "no column named '" + std::string(name) + "'");
}

void Dataset::set_group(std::string var, std::vector<std::string> values) {
    group_var_ = std::move(var);
    group_ = std::move(values);
}

void Dataset::validate(bool require_two_levels) const {
    for (std::size_t j = 0; j < n_vars(); ++j) {
        const auto& col = columns_[j];
        for (Eigen::Index i = 0; i < col.size(); ++i)
            if (!std::isfinite(col[i]))
                throw Error("NonFiniteData", "column '" + names_[j] + "' has a non-finite value");
        switch (dists_[j]) {
        case Distribution::binomial: {
            bool zero = false, one = false;
            for (Eigen::Index i = 0; i < col.size(); ++i) {
                if (col[i] == 0) zero = true;
                else if (col[i] == 1) one = true;
                else throw Error("BadLevelCount", "binomial column '" + names_[j] + "' is not coded 0/1");
            }
            if (require_two_levels && !(zero && one))
                throw Error("BadLevelCount", "binomial column '" + names_[j] + "' has a single level");
            break;
        }
        case Distribution::poisson:
            for (Eigen::Index i = 0; i < col.size(); ++i) {
                if (col[i] < 0) throw Error("NegativeCount", "poisson column '" + names_[j] + "' has a negative value");
                if (col[i] != std::floor(col[i]))
                    throw Error("NonIntegerCount", "poisson column '" + names_[j] + "' has a non-integer value");
            }
            break;
        case Distribution::gaussian: break;
        }
    }
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string Dataset::content_fingerprint() const {
    std::ostringstream os;
    write_dataset(os, *this);
    return fnv1a_hex(os.str());
}

Dataset load_dataset_text(std::string_view bytes, const DistSpec& spec) {
    std::istringstream in{std::string(bytes)};
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        header = split_csv(line);
        break;
    }
    if (header.empty()) throw Error("ParseError", "data file has no header");

    std::vector<std::vector<std::string>> raw(header.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw Error("ParseError", "line " + std::to_string(line_no) + " has " +
                                          std::to_string(fields.size()) + " fields, expected " +
                                          std::to_string(header.size()));
        for (std::size_t j = 0; j < fields.size(); ++j) raw[j].push_back(std::move(fields[j]));
    }

    auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return j;
        return std::nullopt;
    };
    for (const auto& h : header) {
        bool listed = (spec.group_var && *spec.group_var == h) ||
                      std::any_of(spec.columns.begin(), spec.columns.end(),
                                  [&](const auto& c) { return c.first == h; });
        if (!listed) throw Error("UnspecifiedColumn", "column '" + h + "' has no distribution");
    }

    std::vector<std::string> names;
    std::vector<Distribution> dists;
    std::vector<Eigen::VectorXd> cols;
    std::map<std::string, std::pair<std::string, std::string>> levels;
    for (const auto& [name, dist] : spec.columns) {
        auto j = find_col(name);
        if (!j) throw Error("MissingColumn", "column '" + name + "' not found in data");
        const auto& values = raw[*j];
        Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i)
            if (is_missing(values[i]))
                throw Error("MissingValue", "column '" + name + "' row " + std::to_string(i + 1) + " is missing");

        if (dist == Distribution::binomial) {
            std::set<std::string> distinct(values.begin(), values.end());
            if (distinct.size() != 2)
                throw Error("BadLevelCount", "binomial column '" + name + "' has " +
                                                 std::to_string(distinct.size()) + " levels");
            std::string lo = *distinct.begin(), hi = *distinct.rbegin();
            auto nlo = to_number(lo), nhi = to_number(hi);
            if (nlo && nhi && *nlo > *nhi) std::swap(lo, hi);  // numeric levels: smaller -> 0
            for (std::size_t i = 0; i < values.size(); ++i) v[i] = values[i] == hi ? 1.0 : 0.0;
            levels[name] = {lo, hi};
        } else {
            for (std::size_t i = 0; i < values.size(); ++i) {
                auto x = to_number(values[i]);
                if (!x) throw Error("ParseError", "column '" + name + "' has non-numeric value '" + values[i] + "'");
                v[i] = *x;
            }
        }
        names.push_back(name);
        dists.push_back(dist);
        cols.push_back(std::move(v));
    }
    Dataset ds(std::move(names), std::move(dists), std::move(cols));
    ds.validate(true);
    ds.set_levels(std::move(levels));
    if (spec.group_var) {
        auto j = find_col(*spec.group_var);
        if (!j) throw Error("MissingColumn", "group column '" + *spec.group_var + "' not found");
        ds.set_group(*spec.group_var, raw[*j]);
    }
    std::string fp_input(bytes);
    fp_input += '\x1f';
    fp_input += spec.canonical();
    ds.set_fingerprint(fnv1a_hex(fp_input));
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const DistSpec& spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IOError", "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return load_dataset_text(ss.str(), spec);
}

void write_dataset(std::ostream& out, const Dataset& ds) {
    for (std::size_t j = 0; j < ds.n_vars(); ++j) out << (j ? "," : "") << ds.names()[j];
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < ds.n_obs(); ++i) {
        for (std::size_t j = 0; j < ds.n_vars(); ++j) {
            double v = ds.column(j)[static_cast<Eigen::Index>(i)];
            if (ds.dists()[j] == Distribution::gaussian)
                std::snprintf(buf, sizeof buf, "%.17g", v);
            else
                std::snprintf(buf, sizeof buf, "%.0f", v);
            out << (j ? "," : "") << buf;
        }
        out << '\n';
    }
}

Dataset standardize(const Dataset& ds) {
    Dataset out = ds;
    for (std::size_t j = 0; j < ds.n_vars(); ++j) {
        if (ds.dists()[j] != Distribution::gaussian) continue;
        const auto& x = ds.column(j);
        const double n = static_cast<double>(x.size());
        if (x.size() < 2) throw Error("ZeroVariance", "column '" + ds.names()[j] + "' has fewer than two values");
        double mean = x.mean();
        double ss = (x.array() - mean).square().sum();
        double sd = std::sqrt(ss / (n - 1));
        if (!(sd > 0)) throw Error("ZeroVariance", "gaussian column '" + ds.names()[j] + "' is constant");
        Eigen::VectorXd z = (x.array() - mean) / sd;
        // second pass removes the residual rounding in the mean
        z.array() -= z.mean();
        out.columns_[j] = std::move(z);
        out.transforms_[j] = Standardization{mean, sd};
    }
    return out;
}

DesignMatrix build_design(const Dataset& ds, std::string_view child,
                          const std::vector<std::string>& parents) {
    std::size_t c = ds.index_of(child);
    std::vector<std::string> sorted = parents;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw Error("DuplicateParent", "parent set lists a name twice");
    std::uint64_t mask = 0;
    for (const auto& p : sorted) {
        std::size_t j = ds.index_of(p);
        if (j == c) throw Error("SelfParent", "'" + std::string(child) + "' cannot be its own parent");
        mask |= std::uint64_t{1} << j;
    }
    return build_design(ds, c, mask);
}

DesignMatrix build_design(const Dataset& ds, std::size_t child, std::uint64_t parent_mask) {
    if (child >= ds.n_vars()) throw Error("UnknownName", "child index out of range");
    if (parent_mask >> child & 1U) throw Error("SelfParent", "node cannot be its own parent");
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < ds.n_vars(); ++j)
        if (parent_mask >> j & 1U) cols.push_back(j);
    if (ds.n_vars() < 64 && (parent_mask >> ds.n_vars()) != 0)
        throw Error("UnknownName", "parent mask references a missing column");
    std::sort(cols.begin(), cols.end(),
              [&](std::size_t a, std::size_t b) { return ds.names()[a] < ds.names()[b]; });

    DesignMatrix d;
    const auto n = static_cast<Eigen::Index>(ds.n_obs());
    d.response = ds.column(child);
    d.predictors.resize(n, static_cast<Eigen::Index>(cols.size() + 1));
    d.predictors.col(0).setOnes();
    d.labels.push_back("(Intercept)");
    for (std::size_t k = 0; k < cols.size(); ++k) {
        d.predictors.col(static_cast<Eigen::Index>(k + 1)) = ds.column(cols[k]);
        d.labels.push_back(ds.names()[cols[k]]);
    }
    return d;
}

}  // namespace abn
