#pragma once

// End-to-end orchestration: pool -> k-means (train) -> encode (train/test)
// -> [fuse] -> grid search -> train -> evaluate, with every intermediate
// written to the output directory and a key=value run manifest.

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "udf/classifier.hpp"
#include "udf/config.hpp"
#include "udf/encoding.hpp"
#include "udf/error.hpp"
#include "udf/feature_io.hpp"
#include "udf/fusion.hpp"
#include "udf/kmeans.hpp"
#include "udf/pooling.hpp"

namespace udf {

/// Hex SHA-256 of a file's contents.
inline std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for checksum");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest init failed");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return hex.str();
}

/// Ordered key=value records.
class Manifest {
public:
    template <typename T>
    void add(const std::string& key, const T& value) {
        std::ostringstream ss;
        ss.precision(17);
        ss << value;
        entries_.emplace_back(key, ss.str());
    }

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

    std::string get(const std::string& key) const {
        for (const auto& [k, v] : entries_) {
            if (k == key) return v;
        }
        throw DataError("manifest has no key '" + key + "'");
    }

    /// Entries whose key starts with `prefix`.
    std::map<std::string, std::string> with_prefix(const std::string& prefix) const {
        std::map<std::string, std::string> out;
        for (const auto& [k, v] : entries_) {
            if (k.rfind(prefix, 0) == 0) out.emplace(k, v);
        }
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError(path, "cannot open for writing");
        for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
        if (!out) throw IoError(path, "write failed");
    }

    static Manifest read(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError(path, "cannot open manifest");
        Manifest m;
        std::string line;
        while (std::getline(in, line)) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            m.entries_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
        }
        return m;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Runs fn, prefixing any error message with the stage name.
template <typename Fn>
auto run_stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const IoError& e) {
        throw IoError(e.path(), name + ": " + std::string(e.what()).substr(e.path().size() + 2));
    } catch (const FormatError& e) {
        throw FormatError(name + ": " + e.what());
    } catch (const DimensionError& e) {
        throw DimensionError(name + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(name + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(name + ": " + e.what());
    }
}

struct ClassificationResult {
    GridSearchResult grid;
    LinearModel model;
    EvalReport report;
};

/// Grid search on the training split, refit at the best C, evaluate on test.
inline ClassificationResult classify(const FeatureVectorBatch& train_x, std::span<const int> train_y,
                                     const FeatureVectorBatch& test_x, std::span<const int> test_y,
                                     const GridSearchConfig& config) {
    ClassificationResult r;
    r.grid = run_stage("grid-search", [&] { return grid_search(train_x, train_y, config); });
    r.model = run_stage("train-lr", [&] { return train(train_x, train_y, r.grid.best_C, config.train); });
    r.report = run_stage("eval", [&] { return evaluate(r.model, test_x, test_y); });
    return r;
}

inline void write_grid_table(const GridSearchResult& grid, std::ostream& out) {
    out << "C,mean_accuracy";
    const std::size_t folds = grid.rows.empty() ? 0 : grid.rows.front().fold_accuracy.size();
    for (std::size_t f = 0; f < folds; ++f) out << ",fold" << f;
    out << '\n';
    out.precision(10);
    for (const auto& row : grid.rows) {
        out << row.C << ',' << row.mean_accuracy;
        for (double a : row.fold_accuracy) out << ',' << a;
        out << '\n';
    }
    out << "best_C=" << grid.best_C << '\n';
}

inline void write_eval_report(const EvalReport& report, std::ostream& out) {
    out.precision(10);
    out << "accuracy=" << report.accuracy << '\n'
        << "count=" << report.count << '\n'
        << "true_private_pred_private=" << report.confusion[0][0] << '\n'
        << "true_private_pred_public=" << report.confusion[0][1] << '\n'
        << "true_public_pred_private=" << report.confusion[1][0] << '\n'
        << "true_public_pred_public=" << report.confusion[1][1] << '\n'
        << "predict_seconds=" << report.predict_seconds << '\n';
}

inline void write_eval_text(const EvalReport& report, std::ostream& out) {
    const auto correct = report.confusion[0][0] + report.confusion[1][1];
    char line[160];
    std::snprintf(line, sizeof line, "accuracy: %.4f (%zu/%zu)\n", report.accuracy, correct, report.count);
    out << line << "confusion (rows: true, columns: predicted)\n";
    std::snprintf(line, sizeof line, "            private   public\n  private  %8zu %8zu\n  public   %8zu %8zu\n",
                  report.confusion[0][0], report.confusion[0][1], report.confusion[1][0],
                  report.confusion[1][1]);
    out << line;
    std::snprintf(line, sizeof line, "prediction time: %.6f s (model evaluation only, excludes file loading)\n",
                  report.predict_seconds);
    out << line;
}

struct PipelineResult {
    ClassificationResult classification;
    Manifest manifest;
    std::string manifest_path;
};

namespace detail {

inline std::string out_file(const PipelineConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.output_dir) / name).string();
}

inline void log_line(std::ostream* log, const std::string& msg) {
    if (log != nullptr) *log << msg << std::endl;
}

} // namespace detail

inline PipelineResult run_pipeline(const PipelineConfig& cfg, std::ostream* log = nullptr) {
    run_stage("config", [&] { cfg.validate(); });
    std::filesystem::create_directories(cfg.output_dir);
    const auto started = std::chrono::steady_clock::now();

    Manifest m;
    m.add("config.output_dir", cfg.output_dir);
    m.add("config.seed", cfg.seed);
    m.add("config.labels_train", cfg.labels_train);
    m.add("config.labels_test", cfg.labels_test);
    for (const auto& l : cfg.layers) {
        m.add("config.layer." + l.name + ".train", l.train_path);
        m.add("config.layer." + l.name + ".test", l.test_path);
    }
    if (cfg.fusion_pair) m.add("config.fusion", cfg.fusion_pair->first + "," + cfg.fusion_pair->second);
    m.add("config.kmeans.k", cfg.kmeans.k);
    m.add("config.kmeans.max_iterations", cfg.kmeans.max_iterations);
    m.add("config.kmeans.tolerance", cfg.kmeans.tolerance);
    m.add("config.kmeans.init", kmeans_init_name(cfg.kmeans.init));
    m.add("config.kmeans.restarts", cfg.kmeans.restarts);
    m.add("config.kmeans.seed", cfg.kmeans.seed);
    {
        std::ostringstream cs;
        for (std::size_t i = 0; i < cfg.classifier.c_values.size(); ++i) {
            cs << (i ? "," : "") << cfg.classifier.c_values[i];
        }
        m.add("config.classifier.c_values", cs.str());
    }
    m.add("config.classifier.folds", cfg.classifier.folds);
    m.add("config.classifier.tol", cfg.classifier.train.tol);
    m.add("config.classifier.max_iter", cfg.classifier.train.max_iter);
    m.add("config.classifier.seed", cfg.classifier.seed);

    std::vector<std::string> inputs{cfg.labels_train, cfg.labels_test};
    std::vector<std::string> outputs;

    const auto train_labels = run_stage("labels", [&] { return read_labels(cfg.labels_train); });
    const auto test_labels = run_stage("labels", [&] { return read_labels(cfg.labels_test); });

    std::map<std::string, std::pair<FeatureVectorBatch, FeatureVectorBatch>> encoded;
    for (const auto& layer : cfg.layers) {
        inputs.push_back(layer.train_path);
        inputs.push_back(layer.test_path);
        const auto idf_train_path = detail::out_file(cfg, "idf_train_" + layer.name + ".udfv");
        const auto idf_test_path = detail::out_file(cfg, "idf_test_" + layer.name + ".udfv");
        const auto codebook_path = detail::out_file(cfg, "codebook_" + layer.name + ".udfc");
        const auto udf_train_path = detail::out_file(cfg, "udf_train_" + layer.name + ".udfv");
        const auto udf_test_path = detail::out_file(cfg, "udf_test_" + layer.name + ".udfv");

        detail::log_line(log, "[pool] layer " + layer.name);
        auto idf_train = run_stage("pool", [&] {
            auto f = compute_initial_features(read_tensor_file(layer.train_path));
            write_vector_file(f, idf_train_path);
            return f;
        });
        auto idf_test = run_stage("pool", [&] {
            auto f = compute_initial_features(read_tensor_file(layer.test_path));
            write_vector_file(f, idf_test_path);
            return f;
        });

        detail::log_line(log, "[kmeans-fit] layer " + layer.name + " k=" + std::to_string(cfg.kmeans.k));
        const auto codebook = run_stage("kmeans-fit", [&] {
            auto cb = fit_codebook(idf_train, cfg.kmeans);
            write_codebook_file(cb, codebook_path);
            return cb;
        });
        m.add("codebook." + layer.name + ".inertia", codebook.inertia);
        m.add("codebook." + layer.name + ".iterations", codebook.iterations_run);

        detail::log_line(log, "[encode] layer " + layer.name);
        auto udf_train = run_stage("encode", [&] {
            auto e = triangle_encode(idf_train, codebook);
            write_vector_file(e, udf_train_path);
            return e;
        });
        auto udf_test = run_stage("encode", [&] {
            auto e = triangle_encode(idf_test, codebook);
            write_vector_file(e, udf_test_path);
            return e;
        });
        outputs.insert(outputs.end(), {idf_train_path, idf_test_path, codebook_path, udf_train_path, udf_test_path});
        encoded.emplace(layer.name, std::make_pair(std::move(udf_train), std::move(udf_test)));
    }

    std::string features_name;
    auto [train_x, test_x] = [&]() -> std::pair<FeatureVectorBatch, FeatureVectorBatch> {
        if (cfg.fusion_pair) {
            features_name = "fused(" + cfg.fusion_pair->first + "," + cfg.fusion_pair->second + ")";
            detail::log_line(log, "[fuse] " + features_name);
            const auto& a = encoded.at(cfg.fusion_pair->first);
            const auto& b = encoded.at(cfg.fusion_pair->second);
            return run_stage("fuse", [&] {
                auto tr = serial_fuse(a.first, b.first);
                auto te = serial_fuse(a.second, b.second);
                write_vector_file(tr, detail::out_file(cfg, "fused_train.udfv"));
                write_vector_file(te, detail::out_file(cfg, "fused_test.udfv"));
                return std::make_pair(std::move(tr), std::move(te));
            });
        }
        features_name = cfg.features_layer.empty() ? cfg.layers.front().name : cfg.features_layer;
        return encoded.at(features_name);
    }();
    if (cfg.fusion_pair) {
        outputs.push_back(detail::out_file(cfg, "fused_train.udfv"));
        outputs.push_back(detail::out_file(cfg, "fused_test.udfv"));
    }
    m.add("features", features_name);
    m.add("features.dim", train_x.dim());

    const auto train_y = run_stage("labels", [&] { return labels_for(train_x.ids(), train_labels); });
    const auto test_y = run_stage("labels", [&] { return labels_for(test_x.ids(), test_labels); });

    detail::log_line(log, "[grid-search] " + std::to_string(cfg.classifier.c_values.size()) + " C values, " +
                              std::to_string(cfg.classifier.folds) + " folds");
    PipelineResult result;
    result.classification = classify(train_x, train_y, test_x, test_y, cfg.classifier);
    const auto& cls = result.classification;

    const auto grid_path = detail::out_file(cfg, "grid_search.csv");
    const auto model_path = detail::out_file(cfg, "model.udfm");
    const auto eval_path = detail::out_file(cfg, "eval.txt");
    run_stage("write", [&] {
        std::ofstream g(grid_path, std::ios::trunc);
        write_grid_table(cls.grid, g);
        if (!g) throw IoError(grid_path, "write failed");
        write_model_file(cls.model, model_path);
        std::ofstream e(eval_path, std::ios::trunc);
        write_eval_report(cls.report, e);
        if (!e) throw IoError(eval_path, "write failed");
    });
    outputs.push_back(grid_path);
    outputs.push_back(model_path);

    m.add("metric.best_C", cls.grid.best_C);
    m.add("metric.cv_accuracy", cls.grid.best_accuracy);
    m.add("metric.accuracy", cls.report.accuracy);
    m.add("metric.test_count", cls.report.count);
    m.add("metric.confusion", std::to_string(cls.report.confusion[0][0]) + "," +
                                  std::to_string(cls.report.confusion[0][1]) + "," +
                                  std::to_string(cls.report.confusion[1][0]) + "," +
                                  std::to_string(cls.report.confusion[1][1]));
    m.add("metric.train_objective", cls.model.train_meta.final_objective);
    m.add("metric.train_iterations", cls.model.train_meta.iterations);
    for (const auto& p : inputs) m.add("sha256.input." + p, sha256_file(p));
    for (const auto& p : outputs) {
        m.add("sha256.output." + std::filesystem::path(p).filename().string(), sha256_file(p));
    }
    m.add("timing.predict_seconds", cls.report.predict_seconds);
    m.add("timing.total_seconds",
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());

    result.manifest_path = detail::out_file(cfg, "manifest.txt");
    run_stage("write", [&] { m.write(result.manifest_path); });
    detail::log_line(log, "[eval] accuracy=" + std::to_string(cls.report.accuracy) +
                              " best_C=" + std::to_string(cls.grid.best_C));
    result.manifest = std::move(m);
    return result;
}

struct KSweepRow {
    std::size_t k = 0;
    double accuracy = 0.0;
    double best_C = 0.0;
    double cv_accuracy = 0.0;
    double inertia = 0.0;
};

/// Repeats codebook learning, encoding and classification for each k on a
/// single layer. Writes k_sweep.csv into the output directory.
inline std::vector<KSweepRow> k_sweep(const PipelineConfig& cfg, const std::vector<std::size_t>& ks,
                                      const std::string& layer_name = {}, std::ostream* log = nullptr) {
    run_stage("config", [&] { cfg.validate(); });
    if (ks.empty()) throw DataError("k-sweep: no k values");
    const std::string name = !layer_name.empty()             ? layer_name
                             : !cfg.features_layer.empty() ? cfg.features_layer
                                                           : cfg.layers.front().name;
    const auto* layer = cfg.find_layer(name);
    if (layer == nullptr) throw DataError("k-sweep: layer '" + name + "' is not configured");

    const auto train_labels = run_stage("labels", [&] { return read_labels(cfg.labels_train); });
    const auto test_labels = run_stage("labels", [&] { return read_labels(cfg.labels_test); });
    const auto idf_train = run_stage("pool", [&] { return compute_initial_features(read_tensor_file(layer->train_path)); });
    const auto idf_test = run_stage("pool", [&] { return compute_initial_features(read_tensor_file(layer->test_path)); });
    const auto train_y = run_stage("labels", [&] { return labels_for(idf_train.ids(), train_labels); });
    const auto test_y = run_stage("labels", [&] { return labels_for(idf_test.ids(), test_labels); });

    std::vector<KSweepRow> rows;
    for (std::size_t k : ks) {
        detail::log_line(log, "[k-sweep] layer " + name + " k=" + std::to_string(k));
        KMeansConfig km = cfg.kmeans;
        km.k = k;
        const auto codebook = run_stage("kmeans-fit", [&] { return fit_codebook(idf_train, km); });
        const auto tr = run_stage("encode", [&] { return triangle_encode(idf_train, codebook); });
        const auto te = run_stage("encode", [&] { return triangle_encode(idf_test, codebook); });
        const auto cls = classify(tr, train_y, te, test_y, cfg.classifier);
        rows.push_back({k, cls.report.accuracy, cls.grid.best_C, cls.grid.best_accuracy, codebook.inertia});
    }

    std::filesystem::create_directories(cfg.output_dir);
    const auto path = detail::out_file(cfg, "k_sweep.csv");
    std::ofstream out(path, std::ios::trunc);
    out.precision(10);
    out << "k,accuracy,best_C,cv_accuracy,inertia\n";
    for (const auto& r : rows) {
        out << r.k << ',' << r.accuracy << ',' << r.best_C << ',' << r.cv_accuracy << ',' << r.inertia << '\n';
    }
    if (!out) throw IoError(path, "write failed");
    return rows;
}

} // namespace udf
