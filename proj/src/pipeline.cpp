#include "anomalnet/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "anomalnet/adam.hpp"
#include "anomalnet/image.hpp"

namespace anomalnet {

Metrics compute_metrics(const ConfusionMatrix& cm) {
    Metrics m;
    const double total = (double)cm.total();
    m.accuracy = total > 0 ? (double)(cm.tp + cm.tn) / total : 0.0;
    m.precision = cm.tp + cm.fp > 0 ? (double)cm.tp / (double)(cm.tp + cm.fp) : 0.0;
    m.recall = cm.tp + cm.fn > 0 ? (double)cm.tp / (double)(cm.tp + cm.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

namespace {

// Mean per-image loss over a split, computed in sequential batches.
double full_pass_loss(const Model& model, const DatasetSplit& split, int64_t batch_size) {
    const int64_t n = (int64_t)split.records.size();
    if (n == 0) return 0.0;
    const int64_t s = model.config().input_size;
    double acc = 0.0;
    for (int64_t start = 0; start < n; start += batch_size) {
        const int64_t count = std::min(batch_size, n - start);
        Tensor<float> batch({count, 1, s, s});
        for (int64_t b = 0; b < count; ++b) {
            const Tensor<float>& px = split.records[(size_t)(start + b)].pixels;
            std::copy(px.data(), px.data() + px.numel(), batch.data() + b * s * s);
        }
        auto [recon, cache] = model.forward(batch);
        acc += mse_loss(recon, batch) * (double)count;
    }
    return acc / (double)n;
}

} // namespace

TrainingHistory train_model(Model& model, const DatasetSplit& train_split,
                            const DatasetSplit& val_split, const ModelConfig& config,
                            const ProgressFn& progress) {
    config.validate();
    for (const auto& r : train_split.records)
        if (r.pixels.numel() == 0)
            throw_invalid_argument("train split pixels not loaded; call load_split_pixels");
    for (const auto& r : val_split.records)
        if (r.pixels.numel() == 0)
            throw_invalid_argument("validation split pixels not loaded");

    AdamState<float> opt = adam_init<float>(model.param_shapes(), config.lr, config.beta1,
                                            config.beta2, config.eps);
    TrainingHistory history;
    history.train_loss.reserve((size_t)config.epochs);
    history.val_loss.reserve((size_t)config.epochs);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        auto batches = make_batches(train_split, config.batch_size, config.seed, epoch);
        double loss_acc = 0.0;
        int64_t seen = 0;
        for (size_t b = 0; b < batches.size(); ++b) {
            const Tensor<float>& batch = batches[b];
            auto [recon, cache] = model.forward(batch);
            const double loss = mse_loss(recon, batch);
            if (!std::isfinite(loss))
                throw_numeric("non-finite training loss at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(b));
            Tensor<float> grad = mse_backward(recon, batch);
            ParameterSetT<float> grads = model.backward(cache, grad);
            auto params = model.params().tensor_list();
            auto grad_list = grads.tensor_list();
            adam_step(params, {grad_list.begin(), grad_list.end()}, opt);
            loss_acc += loss * (double)batch.dim(0);
            seen += batch.dim(0);
        }
        const double train_loss = seen > 0 ? loss_acc / (double)seen : 0.0;
        const double val_loss = full_pass_loss(model, val_split, config.batch_size);
        history.train_loss.push_back(train_loss);
        history.val_loss.push_back(val_loss);
        if (progress) progress(epoch, train_loss, val_loss);
    }
    model.set_epochs_trained(model.epochs_trained() + config.epochs);
    return history;
}

double per_image_loss(const Model& model, const Tensor<float>& image) {
    if (image.rank() != 4 || image.dim(0) != 1)
        throw_invalid_argument("per_image_loss expects a single [1,1,S,S] image");
    auto [recon, cache] = model.forward(image);
    return mse_loss(recon, image);
}

std::vector<double> split_losses(const Model& model, const DatasetSplit& split) {
    const int64_t s = model.config().input_size;
    std::vector<double> losses;
    losses.reserve(split.records.size());
    for (const auto& r : split.records) {
        if (r.pixels.numel() == 0)
            throw_invalid_argument("split pixels not loaded: " + r.path);
        Tensor<float> img({1, 1, s, s}, r.pixels.vec());
        losses.push_back(per_image_loss(model, img));
    }
    return losses;
}

Threshold calibrate_threshold(std::span<const double> losses, double k,
                              const std::string& source) {
    if (losses.empty()) throw_invalid_argument("cannot calibrate a threshold on zero losses");
    for (double l : losses)
        if (!std::isfinite(l) || l < 0.0)
            throw_invalid_argument("calibration losses must be finite and non-negative");

    const int64_t n = (int64_t)losses.size();
    double sum = 0.0;
    for (double l : losses) sum += l;
    const double mean = sum / (double)n;
    double sq = 0.0;
    for (double l : losses) sq += (l - mean) * (l - mean);
    const double std_dev = n > 1 ? std::sqrt(sq / (double)(n - 1)) : 0.0;

    Threshold t;
    t.mean = mean;
    t.std = std_dev;
    t.k = k;
    t.tau = mean + k * std_dev;
    t.source = source;
    t.n = n;
    return t;
}

Label classify_loss(double loss, const Threshold& threshold) {
    return loss > threshold.tau ? Label::parasitized : Label::uninfected;
}

EvaluationResult evaluate_split(const Model& model, const Threshold& threshold,
                                const DatasetSplit& test_split) {
    if (test_split.records.empty())
        throw_invalid_argument("cannot evaluate an empty test split");

    EvaluationResult r;
    const std::vector<double> losses = split_losses(model, test_split);
    r.scores.reserve(losses.size());
    for (size_t i = 0; i < losses.size(); ++i) {
        const ImageRecord& rec = test_split.records[i];
        const Label pred = classify_loss(losses[i], threshold);
        r.scores.push_back({rec.path, rec.label, losses[i], pred});
        if (rec.label == Label::parasitized)
            (pred == Label::parasitized ? r.confusion.tp : r.confusion.fn) += 1;
        else
            (pred == Label::parasitized ? r.confusion.fp : r.confusion.tn) += 1;
    }
    r.metrics = compute_metrics(r.confusion);
    return r;
}

void reconstruct_to_pgm(const Model& model, const Tensor<float>& image,
                        const std::string& path) {
    auto [recon, cache] = model.forward(image);
    const int s = model.config().input_size;
    write_pgm(path, quantize_u8(recon), s, s);
}

void write_history_csv(const std::string& path, const TrainingHistory& history) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw_io("cannot open for writing: " + path);
    f << "epoch,train_loss,val_loss\n";
    char line[128];
    for (size_t i = 0; i < history.train_loss.size(); ++i) {
        std::snprintf(line, sizeof(line), "%zu,%.10g,%.10g\n", i + 1, history.train_loss[i],
                      history.val_loss[i]);
        f << line;
    }
    if (!f) throw_io("write failed: " + path);
}

void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw_io("cannot open for writing: " + path);
    f << "path,label,loss,prediction\n";
    char num[64];
    for (const ScoreRow& r : rows) {
        std::snprintf(num, sizeof(num), "%.9g", r.loss);
        f << r.path << ',' << label_name(r.label) << ',' << num << ','
          << label_name(r.prediction) << '\n';
    }
    if (!f) throw_io("write failed: " + path);
}

nlohmann::json threshold_to_json(const Threshold& t) {
    return nlohmann::json{{"mean", t.mean}, {"std", t.std},       {"k", t.k},
                          {"tau", t.tau},   {"source", t.source}, {"n", t.n}};
}

Threshold threshold_from_json(const nlohmann::json& j) {
    Threshold t;
    try {
        t.mean = j.at("mean").get<double>();
        t.std = j.at("std").get<double>();
        t.k = j.at("k").get<double>();
        t.tau = j.at("tau").get<double>();
        t.source = j.at("source").get<std::string>();
        t.n = j.at("n").get<int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("malformed threshold JSON: ") + e.what());
    }
    return t;
}

nlohmann::json metrics_report_json(const EvaluationResult& result, const Threshold& threshold) {
    return nlohmann::json{
        {"confusion",
         {{"tp", result.confusion.tp},
          {"fp", result.confusion.fp},
          {"fn", result.confusion.fn},
          {"tn", result.confusion.tn}}},
        {"metrics",
         {{"accuracy", result.metrics.accuracy},
          {"precision", result.metrics.precision},
          {"recall", result.metrics.recall},
          {"f1", result.metrics.f1}}},
        {"threshold", threshold_to_json(threshold)}};
}

} // namespace anomalnet
