// Command-line front end: train / calibrate / evaluate / predict / reconstruct.
// Every command is a thin shell over the library; outputs are reproducible
// from (config, seed, dataset).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "anomalnet/config_json.hpp"
#include "anomalnet/dataset.hpp"
#include "anomalnet/image.hpp"
#include "anomalnet/model.hpp"
#include "anomalnet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace anomalnet;
using nlohmann::json;

namespace {

struct RunConfig {
    std::string dataset_root;
    std::string output_dir = "out";
    bool has_seed = false;
    uint64_t seed = 0;
    ModelConfig model;
    int64_t train_n = 1607;
    int64_t val_n = 407;
    TestSpec test_spec;
    double threshold_k = 3.0;
    std::string threshold_source = "validation";
};

void check_known_keys(const json& j, std::initializer_list<const char*> known,
                      const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) throw_config("unknown config key " + where + key);
    }
}

RunConfig load_run_config(const std::string& path, bool strict) {
    std::ifstream f(path);
    if (!f) throw_io("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw_config("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw_config("config file must hold a JSON object");
    if (strict)
        check_known_keys(j, {"dataset_root", "output_dir", "seed", "model", "split", "threshold"},
                         "");

    RunConfig rc;
    try {
        if (j.contains("dataset_root")) rc.dataset_root = j.at("dataset_root").get<std::string>();
        if (j.contains("output_dir")) rc.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("seed")) {
            rc.seed = j.at("seed").get<uint64_t>();
            rc.has_seed = true;
        }
        if (j.contains("model"))
            rc.model = model_config_from_json(j.at("model"), ModelConfig{}, strict);
        if (j.contains("split")) {
            const json& s = j.at("split");
            if (strict) check_known_keys(s, {"train_n", "val_n", "test"}, "split.");
            if (s.contains("train_n")) rc.train_n = s.at("train_n").get<int64_t>();
            if (s.contains("val_n")) rc.val_n = s.at("val_n").get<int64_t>();
            if (s.contains("test")) {
                const json& t = s.at("test");
                if (strict) check_known_keys(t, {"parasitized", "uninfected"}, "split.test.");
                if (t.contains("parasitized"))
                    rc.test_spec.parasitized = t.at("parasitized").get<int64_t>();
                if (t.contains("uninfected"))
                    rc.test_spec.uninfected = t.at("uninfected").get<int64_t>();
            }
        }
        if (j.contains("threshold")) {
            const json& t = j.at("threshold");
            if (strict) check_known_keys(t, {"k", "source"}, "threshold.");
            if (t.contains("k")) rc.threshold_k = t.at("k").get<double>();
            if (t.contains("source")) rc.threshold_source = t.at("source").get<std::string>();
        }
    } catch (const json::exception& e) {
        throw_config("bad config value: " + std::string(e.what()));
    }
    if (rc.threshold_source != "validation" && rc.threshold_source != "train")
        throw_config("threshold.source must be \"validation\" or \"train\", got " +
                     rc.threshold_source);
    return rc;
}

struct GlobalFlags {
    std::string config_path;
    bool strict = false;
    bool verbose = false;
    std::optional<uint64_t> seed;
    std::optional<std::string> out;
};

RunConfig resolve_config(const GlobalFlags& g, bool needs_dataset) {
    if (g.config_path.empty()) throw_config("--config is required for this command");
    RunConfig rc = load_run_config(g.config_path, g.strict);
    if (g.seed) {
        rc.seed = *g.seed;
        rc.has_seed = true;
    }
    if (g.out) rc.output_dir = *g.out;
    if (!rc.has_seed)
        throw_config("a seed is mandatory (config \"seed\" or --seed); wall-clock seeding is not supported");
    rc.model.seed = rc.seed;
    if (needs_dataset && rc.dataset_root.empty())
        throw_config("dataset_root is missing from the config");
    return rc;
}

Splits make_splits(const RunConfig& rc) {
    Manifest manifest = scan_dataset(rc.dataset_root);
    if (manifest.skipped > 0)
        std::cerr << "warning: skipped " << manifest.skipped << " non-image file(s)\n";
    return split_dataset(manifest, rc.seed, rc.train_n, rc.val_n, rc.test_spec);
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void cmd_train(const GlobalFlags& g) {
    RunConfig rc = resolve_config(g, true);
    Splits splits = make_splits(rc);
    load_split_pixels(splits.train, rc.model.input_size);
    load_split_pixels(splits.validation, rc.model.input_size);

    Model model(rc.model);
    model.init_parameters();
    ProgressFn progress;
    if (g.verbose)
        progress = [](int epoch, double tl, double vl) {
            std::fprintf(stderr, "epoch %d: train_loss=%.10g val_loss=%.10g\n", epoch + 1, tl,
                         vl);
        };
    TrainingHistory history = train_model(model, splits.train, splits.validation, rc.model,
                                          progress);

    std::error_code ec;
    fs::create_directories(rc.output_dir, ec);
    const std::string ckpt = join_path(rc.output_dir, "model.ckpt");
    const std::string hist = join_path(rc.output_dir, "history.csv");
    save_checkpoint(model, ckpt);
    write_history_csv(hist, history);

    if (!history.train_loss.empty())
        std::printf("final epoch %zu: train_loss=%.10g val_loss=%.10g\n",
                    history.train_loss.size(), history.train_loss.back(),
                    history.val_loss.back());
    else
        std::printf("trained 0 epochs (parameters left at initialization)\n");
    std::printf("wrote %s\n", ckpt.c_str());
    std::printf("wrote %s\n", hist.c_str());
}

void cmd_calibrate(const GlobalFlags& g, const std::string& checkpoint,
                   std::optional<double> k_flag, std::optional<std::string> source_flag) {
    RunConfig rc = resolve_config(g, true);
    if (k_flag) rc.threshold_k = *k_flag;
    if (source_flag) {
        if (*source_flag != "validation" && *source_flag != "train")
            throw_config("--source must be validation or train");
        rc.threshold_source = *source_flag;
    }

    Model model = load_checkpoint(checkpoint);
    Splits splits = make_splits(rc);
    DatasetSplit& source =
        rc.threshold_source == "train" ? splits.train : splits.validation;
    load_split_pixels(source, model.config().input_size);

    const std::vector<double> losses = split_losses(model, source);
    const Threshold th = calibrate_threshold(losses, rc.threshold_k, rc.threshold_source);

    std::error_code ec;
    fs::create_directories(rc.output_dir, ec);
    const std::string out = join_path(rc.output_dir, "threshold.json");
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw_io("cannot open for writing: " + out);
    f << threshold_to_json(th).dump(2) << "\n";
    if (!f) throw_io("write failed: " + out);

    std::printf("threshold: mean=%.10g std=%.10g k=%.10g tau=%.10g (source=%s, n=%lld)\n",
                th.mean, th.std, th.k, th.tau, th.source.c_str(), (long long)th.n);
    std::printf("wrote %s\n", out.c_str());
}

Threshold load_threshold_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw_io("cannot open threshold file: " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw_data("threshold file is not valid JSON: " + std::string(e.what()));
    }
    return threshold_from_json(j);
}

void cmd_evaluate(const GlobalFlags& g, const std::string& checkpoint,
                  const std::string& threshold_path) {
    RunConfig rc = resolve_config(g, true);
    Model model = load_checkpoint(checkpoint);
    const Threshold th = load_threshold_file(threshold_path);

    Splits splits = make_splits(rc);
    load_split_pixels(splits.test, model.config().input_size);
    const EvaluationResult result = evaluate_split(model, th, splits.test);

    std::error_code ec;
    fs::create_directories(rc.output_dir, ec);
    const std::string metrics_path = join_path(rc.output_dir, "metrics.json");
    const std::string scores_path = join_path(rc.output_dir, "scores.csv");
    std::ofstream f(metrics_path, std::ios::trunc);
    if (!f) throw_io("cannot open for writing: " + metrics_path);
    f << metrics_report_json(result, th).dump(2) << "\n";
    if (!f) throw_io("write failed: " + metrics_path);
    write_scores_csv(scores_path, result.scores);

    std::printf("accuracy:  %.4f%%\n", result.metrics.accuracy * 100.0);
    std::printf("precision: %.4f%%\n", result.metrics.precision * 100.0);
    std::printf("recall:    %.4f%%\n", result.metrics.recall * 100.0);
    std::printf("f1:        %.4f%%\n", result.metrics.f1 * 100.0);
    std::printf("wrote %s\n", metrics_path.c_str());
    std::printf("wrote %s\n", scores_path.c_str());
}

int cmd_predict(const std::string& checkpoint, const std::string& threshold_path,
                const std::vector<std::string>& images) {
    Model model = load_checkpoint(checkpoint);
    const Threshold th = load_threshold_file(threshold_path);
    const int s = model.config().input_size;

    bool any_failed = false;
    for (const std::string& path : images) {
        try {
            Tensor<float> px = preprocess_image(path, s);
            Tensor<float> img({1, 1, s, s}, px.vec());
            const double loss = per_image_loss(model, img);
            std::printf("%s\t%.9f\t%s\n", path.c_str(), loss,
                        label_name(classify_loss(loss, th)));
        } catch (const Error& e) {
            std::fprintf(stderr, "error: %s: %s\n", e.kind_name(), e.what());
            any_failed = true;
        }
    }
    return any_failed ? 3 : 0;
}

void cmd_reconstruct(const GlobalFlags& g, const std::string& checkpoint,
                     const std::vector<std::string>& images) {
    Model model = load_checkpoint(checkpoint);
    const int s = model.config().input_size;
    const std::string out_dir = g.out.value_or(".");

    // decode everything up front so a bad input leaves no partial outputs
    std::vector<Tensor<float>> pixels;
    pixels.reserve(images.size());
    for (const std::string& path : images) pixels.push_back(preprocess_image(path, s));

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    for (size_t i = 0; i < images.size(); ++i) {
        const std::string stem = fs::path(images[i]).stem().string();
        const std::string orig_path = join_path(out_dir, stem + ".orig.pgm");
        const std::string recon_path = join_path(out_dir, stem + ".recon.pgm");
        write_pgm(orig_path, quantize_u8(pixels[i]), s, s);
        Tensor<float> img({1, 1, s, s}, pixels[i].vec());
        reconstruct_to_pgm(model, img, recon_path);
        std::printf("wrote %s and %s\n", orig_path.c_str(), recon_path.c_str());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"AnoMalNet: autoencoder-based outlier detection for malaria cell images"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags g;
    app.add_option("--config", g.config_path, "run config JSON file");
    app.add_flag("--strict-config", g.strict, "reject unknown config keys");
    app.add_flag("--verbose", g.verbose, "per-epoch progress on stderr");
    uint64_t seed_val = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "override the config seed");
    std::string out_val;
    auto* out_opt = app.add_option("--out", out_val, "override the output directory");

    auto* train = app.add_subcommand("train", "train the autoencoder on uninfected images");

    auto* calibrate =
        app.add_subcommand("calibrate", "calibrate the mean + k*std loss threshold");
    std::string cal_ckpt;
    calibrate->add_option("--checkpoint", cal_ckpt, "trained model checkpoint")->required();
    double k_val = 0.0;
    auto* k_opt = calibrate->add_option("--k", k_val, "std multiplier (default 3)");
    std::string source_val;
    auto* source_opt = calibrate->add_option("--source", source_val,
                                             "calibration split: validation|train");

    auto* evaluate = app.add_subcommand("evaluate", "score the test split and report metrics");
    std::string eval_ckpt, eval_th;
    evaluate->add_option("--checkpoint", eval_ckpt, "trained model checkpoint")->required();
    evaluate->add_option("--threshold", eval_th, "threshold JSON from calibrate")->required();

    auto* predict = app.add_subcommand("predict", "classify individual image files");
    std::string pred_ckpt, pred_th;
    std::vector<std::string> pred_images;
    predict->add_option("--checkpoint", pred_ckpt, "trained model checkpoint")->required();
    predict->add_option("--threshold", pred_th, "threshold JSON from calibrate")->required();
    predict->add_option("images", pred_images, "image files")->required();

    auto* reconstruct =
        app.add_subcommand("reconstruct", "write side-by-side original/reconstruction PGMs");
    std::string rec_ckpt;
    std::vector<std::string> rec_images;
    reconstruct->add_option("--checkpoint", rec_ckpt, "trained model checkpoint")->required();
    reconstruct->add_option("images", rec_images, "image files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 2;
    }
    if (seed_opt->count() > 0) g.seed = seed_val;
    if (out_opt->count() > 0) g.out = out_val;

    try {
        if (train->parsed()) {
            cmd_train(g);
        } else if (calibrate->parsed()) {
            cmd_calibrate(g, cal_ckpt,
                          k_opt->count() > 0 ? std::optional<double>(k_val) : std::nullopt,
                          source_opt->count() > 0 ? std::optional<std::string>(source_val)
                                                  : std::nullopt);
        } else if (evaluate->parsed()) {
            cmd_evaluate(g, eval_ckpt, eval_th);
        } else if (predict->parsed()) {
            return cmd_predict(pred_ckpt, pred_th, pred_images);
        } else if (reconstruct->parsed()) {
            cmd_reconstruct(g, rec_ckpt, rec_images);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s: %s\n", e.kind_name(), e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 1;
    }
    return 0;
}
