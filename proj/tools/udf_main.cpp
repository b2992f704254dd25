// udf: command-line front end for the unsupervised deep feature pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 internal error.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "udf/udf.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

std::vector<std::size_t> parse_k_list(const std::string& text) {
    std::vector<std::size_t> ks;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            const long v = std::stol(item);
            if (v <= 0) throw std::invalid_argument(item);
            ks.push_back(static_cast<std::size_t>(v));
        } catch (const std::logic_error&) {
            throw udf::DataError("bad k value '" + item + "'");
        }
    }
    if (ks.empty()) throw udf::DataError("no k values given");
    return ks;
}

// name:HxWxD
udf::LayerShape parse_layer_shape(const std::string& text) {
    udf::LayerShape shape;
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0) throw udf::DataError("layer must be name:HxWxD, got '" + text + "'");
    shape.name = text.substr(0, colon);
    if (std::sscanf(text.c_str() + colon + 1, "%zux%zux%zu", &shape.height, &shape.width, &shape.depth) != 3) {
        throw udf::DataError("layer must be name:HxWxD, got '" + text + "'");
    }
    return shape;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised deep features: pooling, k-means codebooks, triangle encoding, "
                 "serial fusion and logistic-regression classification over feature-map files.\n"
                 "Thread count defaults to the hardware concurrency; override with UDF_NUM_THREADS."};
    app.require_subcommand(1);
    std::string stage;
    std::function<void()> action;

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic feature-map dataset");
    udf::SyntheticSpec spec;
    std::string synth_dir;
    std::vector<std::string> synth_layers;
    std::string synth_labels;
    bool synth_config = false;
    std::size_t synth_k = 250;
    synth->add_option("--out-dir", synth_dir, "Output directory")->required();
    synth->add_option("--n-train", spec.n_train, "Training samples")->capture_default_str();
    synth->add_option("--n-test", spec.n_test, "Test samples")->capture_default_str();
    synth->add_option("--layer", synth_layers, "Layer as name:HxWxD (repeatable, default layer:3x3x64)");
    synth->add_option("--clusters", spec.n_latent_clusters, "Latent clusters")->capture_default_str();
    synth->add_option("--label-rule", synth_labels, "Comma list of +1/-1 per cluster (default alternating)");
    synth->add_option("--noise", spec.noise_sigma, "Std-dev of channel-mean noise")->capture_default_str();
    synth->add_option("--spatial-noise", spec.spatial_sigma, "Std-dev of zero-mean spatial variation")
        ->capture_default_str();
    synth->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
    synth->add_flag("--write-config", synth_config, "Also write pipeline.ini for the generated data");
    synth->add_option("--k", synth_k, "k written into pipeline.ini")->capture_default_str();
    synth->callback([&] {
        stage = "synth";
        action = [&] {
            if (!synth_layers.empty()) {
                spec.layers.clear();
                for (const auto& l : synth_layers) spec.layers.push_back(parse_layer_shape(l));
            }
            if (!synth_labels.empty()) {
                std::stringstream ss(synth_labels);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    if (item == "1" || item == "+1") {
                        spec.label_rule.push_back(1);
                    } else if (item == "-1") {
                        spec.label_rule.push_back(-1);
                    } else {
                        throw udf::DataError("label rule entries must be +1 or -1, got '" + item + "'");
                    }
                }
            }
            const auto files = udf::generate(spec, synth_dir);
            if (synth_config) {
                udf::PipelineConfig cfg;
                cfg.output_dir = "run";
                cfg.seed = spec.seed;
                cfg.labels_train = "train_labels.csv";
                cfg.labels_test = "test_labels.csv";
                for (const auto& l : spec.layers) {
                    cfg.layers.push_back({l.name, "train_" + l.name + ".udft", "test_" + l.name + ".udft"});
                }
                if (spec.layers.size() >= 2) cfg.fusion_pair = {spec.layers[0].name, spec.layers[1].name};
                cfg.kmeans.k = synth_k;
                cfg.kmeans.seed = spec.seed;
                cfg.classifier.seed = spec.seed;
                udf::write_pipeline_config(cfg, (std::filesystem::path(synth_dir) / "pipeline.ini").string());
            }
            std::cout << "wrote " << files.train_tensors.size() << " layer(s), " << spec.n_train << " train / "
                      << spec.n_test << " test samples to " << synth_dir << '\n';
        };
    });

    // pool
    auto* pool = app.add_subcommand("pool", "Average-pool and normalise a tensor file into initial features");
    std::string pool_in, pool_out;
    pool->add_option("-i,--input", pool_in, "Input .udft tensor file")->required();
    pool->add_option("-o,--output", pool_out, "Output .udfv vector file")->required();
    pool->callback([&] {
        stage = "pool";
        action = [&] { udf::write_vector_file(udf::compute_initial_features(udf::read_tensor_file(pool_in)), pool_out); };
    });

    // kmeans-fit
    auto* km = app.add_subcommand("kmeans-fit", "Learn a k-means codebook from initial features");
    std::string km_in, km_out, km_init = "kmeans++";
    udf::KMeansConfig km_cfg;
    km->add_option("-i,--input", km_in, "Training .udfv file")->required();
    km->add_option("-o,--output", km_out, "Output .udfc codebook")->required();
    km->add_option("--k", km_cfg.k, "Number of centroids")->capture_default_str();
    km->add_option("--max-iter", km_cfg.max_iterations, "Maximum Lloyd iterations")->capture_default_str();
    km->add_option("--tol", km_cfg.tolerance, "Relative inertia change to stop")->capture_default_str();
    km->add_option("--seed", km_cfg.seed, "Seed")->capture_default_str();
    km->add_option("--init", km_init, "kmeans++ or random")->capture_default_str();
    km->add_option("--restarts", km_cfg.restarts, "Independent restarts; lowest inertia wins")->capture_default_str();
    km->callback([&] {
        stage = "kmeans-fit";
        action = [&] {
            km_cfg.init = udf::parse_kmeans_init(km_init);
            const auto cb = udf::fit_codebook(udf::read_vector_file(km_in), km_cfg);
            udf::write_codebook_file(cb, km_out);
            std::cout << "k=" << cb.k << " dim=" << cb.dim << " inertia=" << cb.inertia
                      << " iterations=" << cb.iterations_run << '\n';
        };
    });

    // encode
    auto* enc = app.add_subcommand("encode", "Triangle-encode a tensor file against a codebook");
    std::string enc_tensor, enc_cb, enc_out;
    enc->add_option("-t,--tensor", enc_tensor, "Input .udft tensor file")->required();
    enc->add_option("-c,--codebook", enc_cb, "Codebook .udfc file")->required();
    enc->add_option("-o,--output", enc_out, "Output .udfv file")->required();
    enc->callback([&] {
        stage = "encode";
        action = [&] { udf::encode_dataset(enc_tensor, enc_cb, enc_out); };
    });

    // fuse
    auto* fuse = app.add_subcommand("fuse", "Concatenate two vector files row by row");
    std::string fuse_a, fuse_b, fuse_out;
    fuse->add_option("--first", fuse_a, "First .udfv file (leading columns)")->required();
    fuse->add_option("--second", fuse_b, "Second .udfv file (trailing columns)")->required();
    fuse->add_option("-o,--output", fuse_out, "Output .udfv file")->required();
    fuse->callback([&] {
        stage = "fuse";
        action = [&] {
            udf::write_vector_file(udf::serial_fuse(udf::read_vector_file(fuse_a), udf::read_vector_file(fuse_b)),
                                   fuse_out);
        };
    });

    // train-lr
    auto* tr = app.add_subcommand("train-lr", "Train an L2-regularised logistic-regression model");
    std::string tr_features, tr_labels, tr_out;
    double tr_c = 1.0;
    udf::TrainOptions tr_opts;
    tr->add_option("-f,--features", tr_features, "Training .udfv file")->required();
    tr->add_option("-l,--labels", tr_labels, "Label CSV")->required();
    tr->add_option("-C,--C", tr_c, "Regularisation trade-off C")->capture_default_str();
    tr->add_option("--tol", tr_opts.tol, "Gradient-norm tolerance")->capture_default_str();
    tr->add_option("--max-iter", tr_opts.max_iter, "Maximum Newton iterations")->capture_default_str();
    tr->add_option("-o,--output", tr_out, "Output .udfm model")->required();
    tr->callback([&] {
        stage = "train-lr";
        action = [&] {
            const auto x = udf::read_vector_file(tr_features);
            const auto y = udf::labels_for(x.ids(), udf::read_labels(tr_labels));
            const auto model = udf::train(x, y, tr_c, tr_opts);
            udf::write_model_file(model, tr_out);
            std::cout << "objective=" << model.train_meta.final_objective
                      << " iterations=" << model.train_meta.iterations
                      << " converged=" << (model.train_meta.converged ? "yes" : "no") << '\n';
        };
    });

    // grid-search
    auto* gs = app.add_subcommand("grid-search", "Cross-validated grid search over C");
    std::string gs_features, gs_labels, gs_cvalues = "1-50", gs_out;
    udf::GridSearchConfig gs_cfg;
    gs->add_option("-f,--features", gs_features, "Training .udfv file")->required();
    gs->add_option("-l,--labels", gs_labels, "Label CSV")->required();
    gs->add_option("--c-values", gs_cvalues, "Range a-b or comma list")->capture_default_str();
    gs->add_option("--folds", gs_cfg.folds, "Stratified folds")->capture_default_str();
    gs->add_option("--seed", gs_cfg.seed, "Fold shuffling seed")->capture_default_str();
    gs->add_option("--tol", gs_cfg.train.tol, "Gradient-norm tolerance")->capture_default_str();
    gs->add_option("--max-iter", gs_cfg.train.max_iter, "Maximum Newton iterations")->capture_default_str();
    gs->add_option("-o,--output", gs_out, "Also write the CV table to this file");
    gs->callback([&] {
        stage = "grid-search";
        action = [&] {
            gs_cfg.c_values = udf::parse_c_values(gs_cvalues);
            const auto x = udf::read_vector_file(gs_features);
            const auto y = udf::labels_for(x.ids(), udf::read_labels(gs_labels));
            const auto result = udf::grid_search(x, y, gs_cfg);
            udf::write_grid_table(result, std::cout);
            if (!gs_out.empty()) {
                std::ofstream out(gs_out, std::ios::trunc);
                udf::write_grid_table(result, out);
                if (!out) throw udf::IoError(gs_out, "write failed");
            }
        };
    });

    // predict
    auto* pr = app.add_subcommand("predict", "Predict labels for a vector file");
    std::string pr_model, pr_features, pr_out;
    pr->add_option("-m,--model", pr_model, "Model .udfm file")->required();
    pr->add_option("-f,--features", pr_features, ".udfv file")->required();
    pr->add_option("-o,--output", pr_out, "Write CSV here instead of stdout");
    pr->callback([&] {
        stage = "predict";
        action = [&] {
            const auto model = udf::read_model_file(pr_model);
            const auto x = udf::read_vector_file(pr_features);
            const auto p = udf::predict(model, x);
            std::ofstream file;
            if (!pr_out.empty()) {
                file.open(pr_out, std::ios::trunc);
                if (!file) throw udf::IoError(pr_out, "cannot open for writing");
            }
            std::ostream& out = pr_out.empty() ? std::cout : file;
            out.precision(10);
            out << "sample_id,label,score\n";
            for (std::size_t i = 0; i < x.count(); ++i) {
                out << x.ids()[i] << ',' << udf::label_name(p.labels[i]) << ',' << p.scores[i] << '\n';
            }
        };
    });

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate a model on labelled features");
    std::string ev_model, ev_features, ev_labels, ev_report, ev_format = "text";
    ev->add_option("-m,--model", ev_model, "Model .udfm file")->required();
    ev->add_option("-f,--features", ev_features, ".udfv file")->required();
    ev->add_option("-l,--labels", ev_labels, "Label CSV")->required();
    ev->add_option("--report", ev_report, "Write the key=value report to this file");
    ev->add_option("--format", ev_format, "Stdout format: text or kv")
        ->check(CLI::IsMember({"text", "kv"}))
        ->capture_default_str();
    ev->callback([&] {
        stage = "eval";
        action = [&] {
            const auto model = udf::read_model_file(ev_model);
            const auto x = udf::read_vector_file(ev_features);
            const auto y = udf::labels_for(x.ids(), udf::read_labels(ev_labels));
            const auto report = udf::evaluate(model, x, y);
            if (ev_format == "kv") {
                udf::write_eval_report(report, std::cout);
            } else {
                udf::write_eval_text(report, std::cout);
            }
            if (!ev_report.empty()) {
                std::ofstream out(ev_report, std::ios::trunc);
                udf::write_eval_report(report, out);
                if (!out) throw udf::IoError(ev_report, "write failed");
            }
        };
    });

    // pipeline
    auto* pl = app.add_subcommand("pipeline", "Run the full pipeline from a config file");
    std::string pl_config;
    bool pl_quiet = false;
    pl->add_option("-c,--config", pl_config, "Pipeline config file")->required();
    pl->add_flag("-q,--quiet", pl_quiet, "No progress output");
    pl->callback([&] {
        stage = "pipeline";
        action = [&] {
            const auto cfg = udf::read_pipeline_config(pl_config);
            const auto result = udf::run_pipeline(cfg, pl_quiet ? nullptr : &std::cerr);
            udf::write_eval_text(result.classification.report, std::cout);
            std::cout << "best C: " << result.classification.grid.best_C << "\nmanifest: " << result.manifest_path
                      << '\n';
        };
    });

    // k-sweep
    auto* ks = app.add_subcommand("k-sweep", "Accuracy as a function of the codebook size k");
    std::string ks_config, ks_list = "100,150,200,250,300,350,400,450,500", ks_layer;
    bool ks_quiet = false;
    ks->add_option("-c,--config", ks_config, "Pipeline config file")->required();
    ks->add_option("--k", ks_list, "Comma-separated k values")->capture_default_str();
    ks->add_option("--layer", ks_layer, "Layer to sweep (default: features layer or first layer)");
    ks->add_flag("-q,--quiet", ks_quiet, "No progress output");
    ks->callback([&] {
        stage = "k-sweep";
        action = [&] {
            const auto cfg = udf::read_pipeline_config(ks_config);
            const auto rows = udf::k_sweep(cfg, parse_k_list(ks_list), ks_layer, ks_quiet ? nullptr : &std::cerr);
            std::printf("%6s %10s %8s %12s\n", "k", "accuracy", "best_C", "cv_accuracy");
            for (const auto& r : rows) {
                std::printf("%6zu %9.2f%% %8g %11.2f%%\n", r.k, 100.0 * r.accuracy, r.best_C, 100.0 * r.cv_accuracy);
            }
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        action();
        return kExitOk;
    } catch (const udf::DataError& e) {
        std::cerr << "udf " << stage << ": error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "udf " << stage << ": internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}
