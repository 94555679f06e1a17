#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmc/clustering.hpp"
#include "mmc/error.hpp"
#include "mmc/kernel.hpp"
#include "mmc/mapping.hpp"
#include "mmc/optimizer.hpp"

namespace mmc {

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

inline bool blank(const std::string& s) {
    return s.find_first_not_of(" \t") == std::string::npos;
}

// Splits on commas and/or whitespace; empty tokens are dropped.
inline std::vector<std::string> tokens(const std::string& line) {
    std::vector<std::string> out;
    std::string current;
    for (char ch : line) {
        if (ch == ',' || ch == ' ' || ch == '\t') {
            if (!current.empty()) out.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

inline double parse_double(const std::string& token, const std::filesystem::path& path,
                           std::size_t line_number) {
    double value = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ParseError(path.string() + ": line " + std::to_string(line_number) +
                         ": not a number: '" + token + "'");
    return value;
}

inline long long parse_int(const std::string& token, const std::filesystem::path& path,
                           std::size_t line_number) {
    long long value = 0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ParseError(path.string() + ": line " + std::to_string(line_number) +
                         ": not an integer: '" + token + "'");
    return value;
}

// Runs fn and prepends the file context to any library error, preserving the
// error category so the caller can still map it to the right exit code.
template <typename Fn>
auto with_file_context(const std::string& context, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ParseError& e) {
        throw ParseError(context + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(context + ": " + e.what());
    } catch (const DegenerateError& e) {
        throw DegenerateError(context + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(context + ": " + e.what());
    } catch (const DimensionError& e) {
        throw DimensionError(context + ": " + e.what());
    } catch (const Error& e) {
        throw Error(context + ": " + e.what());
    }
}

}  // namespace detail

/// Reads a dense numeric matrix: one row per line, values separated by
/// commas and/or whitespace, no header; one leading `#` comment line is
/// permitted. Validates the row count when expected_rows is given.
inline Eigen::MatrixXd load_matrix(const std::filesystem::path& path,
                                   std::optional<Eigen::Index> expected_rows = std::nullopt) {
    const std::vector<std::string> lines = detail::read_lines(path);
    std::vector<std::vector<double>> rows;
    std::size_t cols = 0;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        if (ln == 0 && !lines[0].empty() && lines[0][0] == '#') continue;
        if (detail::blank(lines[ln])) {
            if (ln + 1 != lines.size())
                throw ParseError(path.string() + ": line " + std::to_string(ln + 1) +
                                 ": blank line inside matrix");
            continue;
        }
        const std::vector<std::string> parts = detail::tokens(lines[ln]);
        std::vector<double> row;
        row.reserve(parts.size());
        for (const std::string& token : parts)
            row.push_back(detail::parse_double(token, path, ln + 1));
        if (rows.empty()) {
            cols = row.size();
        } else if (row.size() != cols) {
            throw ParseError(path.string() + ": line " + std::to_string(ln + 1) + ": expected " +
                             std::to_string(cols) + " values, got " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path.string() + ": no numeric rows");
    if (expected_rows && static_cast<Eigen::Index>(rows.size()) != *expected_rows)
        throw ParseError(path.string() + ": expected " + std::to_string(*expected_rows) +
                         " rows, got " + std::to_string(rows.size()));
    Eigen::MatrixXd matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c)
            matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return matrix;
}

/// Reads one 0-based integer class id per line (same comment rule as
/// load_matrix). Validates the count when expected_rows is given.
inline LabelVector load_labels(const std::filesystem::path& path,
                               std::optional<Eigen::Index> expected_rows = std::nullopt) {
    const std::vector<std::string> lines = detail::read_lines(path);
    LabelVector labels;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        if (ln == 0 && !lines[0].empty() && lines[0][0] == '#') continue;
        if (detail::blank(lines[ln])) continue;
        const std::vector<std::string> parts = detail::tokens(lines[ln]);
        if (parts.size() != 1)
            throw ParseError(path.string() + ": line " + std::to_string(ln + 1) +
                             ": expected one label per line");
        const long long value = detail::parse_int(parts[0], path, ln + 1);
        if (value < 0)
            throw ParseError(path.string() + ": line " + std::to_string(ln + 1) +
                             ": labels must be non-negative");
        labels.push_back(static_cast<int>(value));
    }
    if (labels.empty()) throw ParseError(path.string() + ": no labels");
    if (expected_rows && static_cast<Eigen::Index>(labels.size()) != *expected_rows)
        throw ParseError(path.string() + ": expected " + std::to_string(*expected_rows) +
                         " labels, got " + std::to_string(labels.size()));
    return labels;
}

/// Reads known instance correspondences: two 0-based integers per line
/// (tab- or space-separated). An empty file means no known pairs.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> load_pairs(
    const std::filesystem::path& path) {
    const std::vector<std::string> lines = detail::read_lines(path);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        if (ln == 0 && !lines[0].empty() && lines[0][0] == '#') continue;
        if (detail::blank(lines[ln])) continue;
        const std::vector<std::string> parts = detail::tokens(lines[ln]);
        if (parts.size() != 2)
            throw ParseError(path.string() + ": line " + std::to_string(ln + 1) +
                             ": expected two indices per line");
        const long long a = detail::parse_int(parts[0], path, ln + 1);
        const long long b = detail::parse_int(parts[1], path, ln + 1);
        if (a < 0 || b < 0)
            throw ParseError(path.string() + ": line " + std::to_string(ln + 1) +
                             ": indices must be non-negative");
        pairs.emplace_back(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
    return pairs;
}

struct ViewSpec {
    std::string path;
    ViewKind kind = ViewKind::kFeatures;
    std::optional<double> alpha;
};

struct SourceSpec {
    std::string name;
    Eigen::Index n = 0;
    Eigen::Index clusters = 0;
    std::optional<std::string> labels_path;
    std::vector<ViewSpec> views;
};

struct MappingSpecEntry {
    int source_a = 0;
    int source_b = 1;
    std::string pairs_path;
    std::optional<double> beta;
};

/// File-backed dataset description, normally parsed from a JSON document.
/// Relative paths are resolved against base_dir (the JSON file's directory).
struct DatasetSpec {
    std::vector<SourceSpec> sources;
    std::vector<MappingSpecEntry> mappings;
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const std::string& path) const {
        const std::filesystem::path p(path);
        return p.is_absolute() ? p : base_dir / p;
    }

    static DatasetSpec from_json(const nlohmann::json& doc, std::filesystem::path base_dir) {
        DatasetSpec spec;
        spec.base_dir = std::move(base_dir);
        try {
            if (!doc.contains("sources") || !doc["sources"].is_array() || doc["sources"].empty())
                throw ParseError("dataset spec: 'sources' must be a non-empty array");
            for (const nlohmann::json& s : doc["sources"]) {
                SourceSpec source;
                source.name = s.value("name", "source" + std::to_string(spec.sources.size()));
                source.n = s.at("n").get<Eigen::Index>();
                source.clusters = s.at("clusters").get<Eigen::Index>();
                if (s.contains("labels_path"))
                    source.labels_path = s.at("labels_path").get<std::string>();
                if (!s.contains("views") || !s["views"].is_array() || s["views"].empty())
                    throw ParseError("dataset spec: source '" + source.name +
                                     "' needs a non-empty 'views' array");
                for (const nlohmann::json& v : s["views"]) {
                    ViewSpec view;
                    view.path = v.at("path").get<std::string>();
                    const std::string kind = v.value("kind", "features");
                    if (kind == "features") {
                        view.kind = ViewKind::kFeatures;
                    } else if (kind == "similarity") {
                        view.kind = ViewKind::kSimilarity;
                    } else {
                        throw ParseError("dataset spec: unknown view kind '" + kind + "'");
                    }
                    if (v.contains("alpha")) view.alpha = v.at("alpha").get<double>();
                    source.views.push_back(std::move(view));
                }
                spec.sources.push_back(std::move(source));
            }
            if (doc.contains("mappings")) {
                for (const nlohmann::json& m : doc["mappings"]) {
                    MappingSpecEntry entry;
                    entry.source_a = m.at("source_a").get<int>();
                    entry.source_b = m.at("source_b").get<int>();
                    entry.pairs_path = m.at("pairs_path").get<std::string>();
                    if (m.contains("beta")) entry.beta = m.at("beta").get<double>();
                    spec.mappings.push_back(std::move(entry));
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("dataset spec: ") + e.what());
        }
        return spec;
    }

    static DatasetSpec load(const std::filesystem::path& json_path) {
        std::ifstream in(json_path);
        if (!in) throw ParseError("cannot open file: " + json_path.string());
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(json_path.string() + ": " + e.what());
        }
        return from_json(doc, std::filesystem::absolute(json_path).parent_path());
    }
};

/// One coupled source pair as loaded from disk, keeping the raw known pairs
/// so callers (e.g. known-fraction sweeps) can rebuild mappings.
struct LoadedPair {
    int source_a = 0;
    int source_b = 1;
    double beta = 1.0;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> known_pairs;
};

struct LoadedDataset {
    MmcProblem problem;
    std::vector<std::optional<LabelVector>> truth;
    std::vector<LoadedPair> pairs;
    std::vector<std::string> warnings;
};

/// Materializes a DatasetSpec: feature views pass through the Gaussian
/// kernel, similarity views through symmetrization/clamping (surfaced as
/// warnings), and every view becomes a normalized Laplacian. Weights come
/// from the per-view/per-pair spec values, falling back to config defaults.
inline LoadedDataset load_dataset(const DatasetSpec& spec, const MmcConfig& config) {
    LoadedDataset out;
    for (const SourceSpec& source : spec.sources) {
        SourceProblem problem_source;
        problem_source.name = source.name;
        problem_source.cluster_count = source.clusters;
        for (const ViewSpec& view : source.views) {
            const std::filesystem::path path = spec.resolve(view.path);
            detail::with_file_context(path.string(), [&] {
                if (view.kind == ViewKind::kFeatures) {
                    const Eigen::MatrixXd x = load_matrix(path, source.n);
                    problem_source.laplacians.push_back(
                        normalized_laplacian(gaussian_kernel(x)));
                } else {
                    const Eigen::MatrixXd s = load_matrix(path, source.n);
                    SimilarityValidation checked = validate_similarity(s);
                    if (checked.clamped_entries > 0)
                        out.warnings.push_back(path.string() + ": clamped " +
                                               std::to_string(checked.clamped_entries) +
                                               " negative similarity entries to 0");
                    problem_source.laplacians.push_back(normalized_laplacian(checked.kernel));
                }
                return 0;
            });
            problem_source.view_weights.push_back(view.alpha.value_or(config.default_alpha));
        }
        if (source.labels_path) {
            const std::filesystem::path path = spec.resolve(*source.labels_path);
            out.truth.push_back(detail::with_file_context(
                path.string(), [&] { return load_labels(path, source.n); }));
        } else {
            out.truth.push_back(std::nullopt);
        }
        out.problem.sources.push_back(std::move(problem_source));
    }
    for (const MappingSpecEntry& entry : spec.mappings) {
        const int count = static_cast<int>(spec.sources.size());
        if (entry.source_a < 0 || entry.source_b < 0 || entry.source_a >= count ||
            entry.source_b >= count || entry.source_a == entry.source_b)
            throw ParseError("dataset spec: mapping references invalid source pair (" +
                             std::to_string(entry.source_a) + ", " +
                             std::to_string(entry.source_b) + ")");
        const std::filesystem::path path = spec.resolve(entry.pairs_path);
        LoadedPair pair;
        pair.beta = entry.beta.value_or(config.default_beta);
        pair.known_pairs = detail::with_file_context(path.string(), [&] { return load_pairs(path); });
        pair.source_a = entry.source_a;
        pair.source_b = entry.source_b;
        if (entry.source_a > entry.source_b) {
            std::swap(pair.source_a, pair.source_b);
            for (auto& [a, b] : pair.known_pairs) std::swap(a, b);
        }
        const Eigen::Index n_a = spec.sources[static_cast<std::size_t>(pair.source_a)].n;
        const Eigen::Index n_b = spec.sources[static_cast<std::size_t>(pair.source_b)].n;
        out.problem.pairs.push_back(
            {pair.beta, detail::with_file_context(path.string(), [&] {
                 return build_mapping(n_a, n_b, pair.known_pairs, pair.source_a, pair.source_b);
             })});
        out.pairs.push_back(std::move(pair));
    }
    out.problem.validate();
    return out;
}

/// Parameters of the synthetic multi-source generator. Shared entities keep
/// one cluster identity across all sources; each view draws its own cluster
/// centers, so views agree on the partition but not on geometry.
struct SynthSpec {
    int sources = 2;
    int views = 2;
    Eigen::Index n = 100;
    Eigen::Index clusters = 3;
    int dim = 8;
    double separation = 1.0;
    double noise = 0.5;
    double known_fraction = 0.6;
    double overlap_fraction = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (sources < 1) throw ValidationError("SynthSpec: sources must be >= 1");
        if (views < 1) throw ValidationError("SynthSpec: views must be >= 1");
        if (n < 1) throw ValidationError("SynthSpec: n must be >= 1");
        if (clusters < 1 || clusters > n)
            throw ValidationError("SynthSpec: clusters must be in [1, n]");
        if (dim < 1) throw ValidationError("SynthSpec: dim must be >= 1");
        if (!(separation >= 0.0) || !(noise >= 0.0))
            throw ValidationError("SynthSpec: separation and noise must be non-negative");
        if (!(known_fraction >= 0.0) || !(known_fraction <= 1.0))
            throw ValidationError("SynthSpec: known_fraction must be in [0, 1]");
        if (!(overlap_fraction >= 0.0) || !(overlap_fraction <= 1.0))
            throw ValidationError("SynthSpec: overlap_fraction must be in [0, 1]");
    }

    static SynthSpec from_json(const nlohmann::json& doc) {
        SynthSpec spec;
        try {
            spec.sources = doc.value("sources", spec.sources);
            spec.views = doc.value("views", spec.views);
            spec.n = doc.value("n", spec.n);
            spec.clusters = doc.value("clusters", spec.clusters);
            spec.dim = doc.value("dim", spec.dim);
            spec.separation = doc.value("separation", spec.separation);
            spec.noise = doc.value("noise", spec.noise);
            spec.known_fraction = doc.value("known_fraction", spec.known_fraction);
            spec.overlap_fraction = doc.value("overlap_fraction", spec.overlap_fraction);
            spec.seed = doc.value("seed", spec.seed);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("synth spec: ") + e.what());
        }
        spec.validate();
        return spec;
    }

    static SynthSpec load(const std::filesystem::path& json_path) {
        std::ifstream in(json_path);
        if (!in) throw ParseError("cannot open file: " + json_path.string());
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(json_path.string() + ": " + e.what());
        }
        return from_json(doc);
    }
};

struct SynthPair {
    int source_a = 0;
    int source_b = 1;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> true_pairs;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> known_pairs;
};

struct SynthDataset {
    std::vector<std::vector<Eigen::MatrixXd>> features;  // [source][view], n x dim
    std::vector<LabelVector> truth;                      // per source, by instance position
    std::vector<SynthPair> pairs;                        // every unordered source pair
};

/// Draws the synthetic dataset. Entity t < floor(overlap*n) exists in every
/// source (same cluster id everywhere); the rest are per-source private.
/// Instance order within each source is an independent shuffle, the known
/// mapping is a uniformly drawn floor(known_fraction * shared) subset of the
/// true correspondences, and everything is deterministic in the seed.
inline SynthDataset generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Eigen::Index shared = static_cast<Eigen::Index>(
        std::floor(spec.overlap_fraction * static_cast<double>(spec.n)));

    // entity id -> cluster id, identical across sources
    auto cluster_of = [&](Eigen::Index entity) {
        return static_cast<int>(entity % spec.clusters);
    };

    SynthDataset data;
    std::vector<std::vector<Eigen::Index>> position_of_entity(
        static_cast<std::size_t>(spec.sources));
    for (int k = 0; k < spec.sources; ++k) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(spec.n));
        for (Eigen::Index t = 0; t < spec.n; ++t) order[static_cast<std::size_t>(t)] = t;
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<Eigen::Index>& positions = position_of_entity[static_cast<std::size_t>(k)];
        positions.assign(static_cast<std::size_t>(spec.n), 0);
        LabelVector labels(static_cast<std::size_t>(spec.n), 0);
        for (Eigen::Index p = 0; p < spec.n; ++p) {
            const Eigen::Index entity = order[static_cast<std::size_t>(p)];
            positions[static_cast<std::size_t>(entity)] = p;
            labels[static_cast<std::size_t>(p)] = cluster_of(entity);
        }
        data.truth.push_back(std::move(labels));

        std::vector<Eigen::MatrixXd> views;
        for (int i = 0; i < spec.views; ++i) {
            Eigen::MatrixXd centers(spec.clusters, spec.dim);
            for (Eigen::Index r = 0; r < spec.clusters; ++r)
                for (int d = 0; d < spec.dim; ++d) centers(r, d) = spec.separation * gauss(rng);
            Eigen::MatrixXd x(spec.n, spec.dim);
            for (Eigen::Index p = 0; p < spec.n; ++p)
                for (int d = 0; d < spec.dim; ++d)
                    x(p, d) = centers(data.truth[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)], d) +
                              spec.noise * gauss(rng);
            views.push_back(std::move(x));
        }
        data.features.push_back(std::move(views));
    }

    for (int a = 0; a < spec.sources; ++a) {
        for (int b = a + 1; b < spec.sources; ++b) {
            SynthPair pair;
            pair.source_a = a;
            pair.source_b = b;
            for (Eigen::Index t = 0; t < shared; ++t)
                pair.true_pairs.emplace_back(
                    position_of_entity[static_cast<std::size_t>(a)][static_cast<std::size_t>(t)],
                    position_of_entity[static_cast<std::size_t>(b)][static_cast<std::size_t>(t)]);
            std::vector<Eigen::Index> entities(static_cast<std::size_t>(shared));
            for (Eigen::Index t = 0; t < shared; ++t) entities[static_cast<std::size_t>(t)] = t;
            std::shuffle(entities.begin(), entities.end(), rng);
            const std::size_t keep = static_cast<std::size_t>(
                std::floor(spec.known_fraction * static_cast<double>(shared)));
            entities.resize(keep);
            std::sort(entities.begin(), entities.end());
            for (Eigen::Index entity : entities)
                pair.known_pairs.push_back(pair.true_pairs[static_cast<std::size_t>(entity)]);
            data.pairs.push_back(std::move(pair));
        }
    }
    return data;
}

/// Builds the in-memory optimization problem for a synthetic dataset with
/// uniform weights (one Gaussian-kernel Laplacian per view).
inline MmcProblem problem_from_synthetic(const SynthDataset& data, double alpha, double beta) {
    MmcProblem problem;
    for (std::size_t k = 0; k < data.features.size(); ++k) {
        SourceProblem source;
        source.name = "source" + std::to_string(k);
        const int classes =
            *std::max_element(data.truth[k].begin(), data.truth[k].end()) + 1;
        source.cluster_count = classes;
        for (const Eigen::MatrixXd& x : data.features[k]) {
            source.laplacians.push_back(normalized_laplacian(gaussian_kernel(x)));
            source.view_weights.push_back(alpha);
        }
        problem.sources.push_back(std::move(source));
    }
    for (const SynthPair& pair : data.pairs) {
        const Eigen::Index n_a = data.features[static_cast<std::size_t>(pair.source_a)][0].rows();
        const Eigen::Index n_b = data.features[static_cast<std::size_t>(pair.source_b)][0].rows();
        problem.pairs.push_back(
            {beta, build_mapping(n_a, n_b, pair.known_pairs, pair.source_a, pair.source_b)});
    }
    return problem;
}

namespace detail {

inline std::string format_value(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path.string());
    out << content;
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace detail

/// Writes a matrix as comma-separated rows with full double precision, so a
/// load_matrix round trip reproduces the values exactly.
inline void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& matrix) {
    std::string content;
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
            if (c > 0) content += ',';
            content += detail::format_value(matrix(r, c));
        }
        content += '\n';
    }
    detail::write_text(path, content);
}

inline void write_labels(const std::filesystem::path& path, const LabelVector& labels) {
    std::string content;
    for (int label : labels) {
        content += std::to_string(label);
        content += '\n';
    }
    detail::write_text(path, content);
}

inline void write_pairs(const std::filesystem::path& path,
                        const std::vector<std::pair<Eigen::Index, Eigen::Index>>& pairs) {
    std::string content;
    for (const auto& [a, b] : pairs) {
        content += std::to_string(a);
        content += '\t';
        content += std::to_string(b);
        content += '\n';
    }
    detail::write_text(path, content);
}

/// Materializes a synthetic dataset as files plus a ready-to-run dataset
/// JSON, and returns the path of that JSON.
inline std::filesystem::path write_dataset(const SynthSpec& spec, const SynthDataset& data,
                                           const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create directory: " + out_dir.string() + ": " + ec.message());

    nlohmann::ordered_json doc;
    doc["sources"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < data.features.size(); ++k) {
        const std::string name = "source" + std::to_string(k);
        nlohmann::ordered_json source;
        source["name"] = name;
        source["n"] = data.features[k][0].rows();
        source["clusters"] = spec.clusters;
        source["labels_path"] = name + ".labels";
        source["views"] = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < data.features[k].size(); ++i) {
            const std::string file = name + "_view" + std::to_string(i) + ".csv";
            write_matrix(out_dir / file, data.features[k][i]);
            source["views"].push_back({{"path", file}, {"kind", "features"}});
        }
        write_labels(out_dir / (name + ".labels"), data.truth[k]);
        doc["sources"].push_back(std::move(source));
    }
    doc["mappings"] = nlohmann::ordered_json::array();
    for (const SynthPair& pair : data.pairs) {
        const std::string file =
            "pair_" + std::to_string(pair.source_a) + "_" + std::to_string(pair.source_b) + ".pairs";
        write_pairs(out_dir / file, pair.known_pairs);
        doc["mappings"].push_back({{"source_a", pair.source_a},
                                   {"source_b", pair.source_b},
                                   {"pairs_path", file}});
    }
    const std::filesystem::path json_path = out_dir / "dataset.json";
    detail::write_text(json_path, doc.dump(2) + "\n");
    return json_path;
}

}  // namespace mmc
