#pragma once

// Pipeline configuration. INI-style: `[section]` headers, `key = value`
// lines, `;` or `#` comment lines. Relative paths resolve against the
// directory holding the config file.
//
//   [pipeline]
//   output_dir   = run            ; required
//   seed         = 0              ; default seed for kmeans and classifier
//   labels_train = train_labels.csv
//   labels_test  = test_labels.csv
//   features     = 47             ; layer to classify without fusion (default: first layer)
//   fusion       = 47,avg_pool    ; optional ordered pair of layer names
//
//   [layer:47]                    ; one section per layer, in order
//   train = train_47.udft
//   test  = test_47.udft
//
//   [kmeans]
//   k = 250
//   max_iterations = 300
//   tolerance = 1e-4
//   init = kmeans++               ; or random
//   restarts = 1
//   seed = 0                      ; optional, defaults to [pipeline] seed
//
//   [classifier]
//   c_values = 1-50               ; integer range a-b, or comma list 0.5,1,2
//   folds = 5
//   tol = 1e-6
//   max_iter = 1000
//   seed = 0                      ; optional, defaults to [pipeline] seed

#include <boost/property_tree/ini_parser.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "udf/classifier.hpp"
#include "udf/error.hpp"
#include "udf/kmeans.hpp"

namespace udf {

struct LayerInput {
    std::string name;
    std::string train_path;
    std::string test_path;
};

struct PipelineConfig {
    std::vector<LayerInput> layers;
    std::string labels_train;
    std::string labels_test;
    std::string features_layer;
    std::optional<std::pair<std::string, std::string>> fusion_pair;
    KMeansConfig kmeans;
    GridSearchConfig classifier;
    std::string output_dir;
    std::uint64_t seed = 0;

    const LayerInput* find_layer(const std::string& name) const {
        for (const auto& l : layers) {
            if (l.name == name) return &l;
        }
        return nullptr;
    }

    /// Checks cross-field invariants and that every input file exists.
    void validate() const {
        if (layers.empty()) throw DataError("config: no [layer:<name>] sections");
        std::set<std::string> names;
        for (const auto& l : layers) {
            if (!names.insert(l.name).second) throw DataError("config: duplicate layer '" + l.name + "'");
        }
        if (fusion_pair) {
            if (fusion_pair->first == fusion_pair->second) {
                throw DataError("config: fusion pair must name two distinct layers");
            }
            for (const auto* n : {&fusion_pair->first, &fusion_pair->second}) {
                if (find_layer(*n) == nullptr) throw DataError("config: fusion layer '" + *n + "' is not configured");
            }
        }
        if (!features_layer.empty() && find_layer(features_layer) == nullptr) {
            throw DataError("config: features layer '" + features_layer + "' is not configured");
        }
        if (output_dir.empty()) throw DataError("config: [pipeline] output_dir is required");
        auto must_exist = [](const std::string& p, const std::string& what) {
            if (p.empty()) throw DataError("config: " + what + " is required");
            if (!std::filesystem::exists(p)) throw IoError(p, what + " does not exist");
        };
        must_exist(labels_train, "labels_train");
        must_exist(labels_test, "labels_test");
        for (const auto& l : layers) {
            must_exist(l.train_path, "train tensor for layer '" + l.name + "'");
            must_exist(l.test_path, "test tensor for layer '" + l.name + "'");
        }
    }
};

/// "a-b" (integer steps, inclusive) or a comma-separated list.
inline std::vector<double> parse_c_values(const std::string& text) {
    std::vector<double> out;
    const auto dash = text.find('-', 1);
    try {
        if (dash != std::string::npos && text.find(',') == std::string::npos &&
            text.find_first_of("eE") == std::string::npos) {
            const long lo = std::stol(text.substr(0, dash));
            const long hi = std::stol(text.substr(dash + 1));
            if (lo <= 0 || hi < lo) throw DataError("bad C range '" + text + "'");
            for (long c = lo; c <= hi; ++c) out.push_back(static_cast<double>(c));
            return out;
        }
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.find_first_not_of(" \t") == std::string::npos) continue;
            out.push_back(std::stod(item));
        }
    } catch (const std::logic_error&) {
        throw DataError("cannot parse C values '" + text + "'");
    }
    if (out.empty()) throw DataError("empty C value list");
    for (double c : out) {
        if (!(c > 0.0)) throw DataError("C values must be positive: '" + text + "'");
    }
    return out;
}

inline KMeansInit parse_kmeans_init(const std::string& s) {
    if (s == "kmeans++" || s == "kmeans_plus_plus") return KMeansInit::kmeans_plus_plus;
    if (s == "random" || s == "random_points") return KMeansInit::random_points;
    throw DataError("unknown k-means init '" + s + "' (expected kmeans++ or random)");
}

inline std::string kmeans_init_name(KMeansInit init) {
    return init == KMeansInit::kmeans_plus_plus ? "kmeans++" : "random";
}

namespace detail {

/// Reads key from section, or returns fallback when absent. Unlike
/// ptree::get with a default, a present but unparsable value is an error.
template <typename T>
T config_value(const boost::property_tree::ptree& section, const std::string& section_name, const std::string& key,
               const T& fallback) {
    const auto raw = section.get_optional<std::string>(key);
    if (!raw) return fallback;
    if constexpr (std::is_same_v<T, std::string>) {
        return *raw;
    } else {
        const bool negative = raw->find('-') != std::string::npos;
        try {
            if (!(std::is_unsigned_v<T> && negative)) return boost::lexical_cast<T>(*raw);
        } catch (const boost::bad_lexical_cast&) {
        }
        throw FormatError("config: [" + section_name + "] " + key + " = '" + *raw + "' is not a valid value");
    }
}

} // namespace detail

inline PipelineConfig parse_pipeline_config(std::istream& in, const std::filesystem::path& base_dir) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw FormatError(std::string("config: ") + e.what());
    }

    auto resolve = [&](const std::string& p) -> std::string {
        if (p.empty()) return p;
        const std::filesystem::path path(p);
        return path.is_absolute() ? p : (base_dir / path).lexically_normal().string();
    };

    PipelineConfig cfg;
    try {
        for (const auto& [section, body] : tree) {
            if (section.rfind("layer:", 0) == 0) {
                LayerInput l;
                l.name = section.substr(6);
                l.train_path = resolve(body.get<std::string>("train", ""));
                l.test_path = resolve(body.get<std::string>("test", ""));
                if (l.name.empty()) throw DataError("config: layer section without a name");
                cfg.layers.push_back(std::move(l));
            } else if (section != "pipeline" && section != "kmeans" && section != "classifier") {
                throw DataError("config: unknown section [" + section + "]");
            }
        }

        const pt::ptree p = tree.get_child("pipeline", pt::ptree());
        cfg.output_dir = resolve(detail::config_value<std::string>(p, "pipeline", "output_dir", ""));
        cfg.seed = detail::config_value<std::uint64_t>(p, "pipeline", "seed", 0);
        cfg.labels_train = resolve(detail::config_value<std::string>(p, "pipeline", "labels_train", ""));
        cfg.labels_test = resolve(detail::config_value<std::string>(p, "pipeline", "labels_test", ""));
        cfg.features_layer = detail::config_value<std::string>(p, "pipeline", "features", "");
        if (auto fusion = p.get_optional<std::string>("fusion"); fusion && !fusion->empty()) {
            const auto comma = fusion->find(',');
            if (comma == std::string::npos) throw DataError("config: fusion must be 'first,second'");
            auto trim = [](std::string s) {
                s.erase(0, s.find_first_not_of(" \t"));
                s.erase(s.find_last_not_of(" \t") + 1);
                return s;
            };
            cfg.fusion_pair = std::make_pair(trim(fusion->substr(0, comma)), trim(fusion->substr(comma + 1)));
        }

        const pt::ptree km = tree.get_child("kmeans", pt::ptree());
        cfg.kmeans.k = detail::config_value<std::size_t>(km, "kmeans", "k", 250);
        cfg.kmeans.max_iterations = detail::config_value<std::size_t>(km, "kmeans", "max_iterations", 300);
        cfg.kmeans.tolerance = detail::config_value<double>(km, "kmeans", "tolerance", 1e-4);
        cfg.kmeans.init = parse_kmeans_init(detail::config_value<std::string>(km, "kmeans", "init", "kmeans++"));
        cfg.kmeans.restarts = detail::config_value<std::size_t>(km, "kmeans", "restarts", 1);
        cfg.kmeans.seed = detail::config_value<std::uint64_t>(km, "kmeans", "seed", cfg.seed);

        const pt::ptree cl = tree.get_child("classifier", pt::ptree());
        cfg.classifier.c_values =
            parse_c_values(detail::config_value<std::string>(cl, "classifier", "c_values", "1-50"));
        cfg.classifier.folds = detail::config_value<std::size_t>(cl, "classifier", "folds", 5);
        cfg.classifier.train.tol = detail::config_value<double>(cl, "classifier", "tol", 1e-6);
        cfg.classifier.train.max_iter = detail::config_value<std::size_t>(cl, "classifier", "max_iter", 1000);
        cfg.classifier.seed = detail::config_value<std::uint64_t>(cl, "classifier", "seed", cfg.seed);
    } catch (const pt::ptree_error& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    if (cfg.kmeans.k == 0) throw DataError("config: k must be positive");
    return cfg;
}

inline PipelineConfig read_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot open config file");
    return parse_pipeline_config(in, std::filesystem::path(path).parent_path());
}

/// Writes a config in the format read by read_pipeline_config.
inline void write_pipeline_config(const PipelineConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path, "cannot open for writing");
    out.precision(17);
    out << "[pipeline]\n"
        << "output_dir = " << cfg.output_dir << '\n'
        << "seed = " << cfg.seed << '\n'
        << "labels_train = " << cfg.labels_train << '\n'
        << "labels_test = " << cfg.labels_test << '\n';
    if (!cfg.features_layer.empty()) out << "features = " << cfg.features_layer << '\n';
    if (cfg.fusion_pair) out << "fusion = " << cfg.fusion_pair->first << ',' << cfg.fusion_pair->second << '\n';
    for (const auto& l : cfg.layers) {
        out << "\n[layer:" << l.name << "]\ntrain = " << l.train_path << "\ntest = " << l.test_path << '\n';
    }
    out << "\n[kmeans]\nk = " << cfg.kmeans.k << "\nmax_iterations = " << cfg.kmeans.max_iterations
        << "\ntolerance = " << cfg.kmeans.tolerance << "\ninit = " << kmeans_init_name(cfg.kmeans.init)
        << "\nrestarts = " << cfg.kmeans.restarts << "\nseed = " << cfg.kmeans.seed << '\n';
    out << "\n[classifier]\nc_values = ";
    for (std::size_t i = 0; i < cfg.classifier.c_values.size(); ++i) {
        out << (i ? "," : "") << cfg.classifier.c_values[i];
    }
    out << "\nfolds = " << cfg.classifier.folds << "\ntol = " << cfg.classifier.train.tol
        << "\nmax_iter = " << cfg.classifier.train.max_iter << "\nseed = " << cfg.classifier.seed << '\n';
    if (!out) throw IoError(path, "write failed");
}

} // namespace udf
