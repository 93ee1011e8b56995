#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "anomalnet/dataset.hpp"
#include "anomalnet/model.hpp"

namespace anomalnet {

struct TrainingHistory {
    std::vector<double> train_loss; // per-epoch mean over the train split
    std::vector<double> val_loss;   // per-epoch full validation pass
};

// Calibrated decision boundary tau = mean + k * std over a set of
// reconstruction losses from normal images.
struct Threshold {
    double mean = 0.0;
    double std = 0.0; // sample standard deviation (n-1 denominator)
    double k = 3.0;
    double tau = 0.0;
    std::string source = "validation"; // {validation, train}
    int64_t n = 0;
};

// positive class = parasitized
struct ConfusionMatrix {
    int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    int64_t total() const { return tp + fp + fn + tn; }
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// accuracy=(tp+tn)/total, precision=tp/(tp+fp), recall=tp/(tp+fn),
// f1=2PR/(P+R); ratios with a zero denominator are defined as 0.
Metrics compute_metrics(const ConfusionMatrix& cm);

using ProgressFn = std::function<void(int epoch, double train_loss, double val_loss)>;

// Trains the autoencoder on the (uninfected-only) train split for
// config.epochs epochs: per epoch, reshuffled batches, forward, MSE against
// the input itself, backward, Adam step; records mean train loss and a full
// validation pass. No early stopping. Aborts with a numeric error naming the
// epoch and batch if the loss goes non-finite.
TrainingHistory train_model(Model& model, const DatasetSplit& train_split,
                            const DatasetSplit& val_split, const ModelConfig& config,
                            const ProgressFn& progress = {});

// MSE between the image and its reconstruction; the anomaly score.
double per_image_loss(const Model& model, const Tensor<float>& image);

// Scores of every record of a split, in split order (pixels must be loaded).
std::vector<double> split_losses(const Model& model, const DatasetSplit& split);

Threshold calibrate_threshold(std::span<const double> losses, double k = 3.0,
                              const std::string& source = "validation");

// parasitized iff loss > tau (strict); a loss exactly at tau is uninfected.
Label classify_loss(double loss, const Threshold& threshold);

struct ScoreRow {
    std::string path;
    Label label;
    double loss;
    Label prediction;
};

struct EvaluationResult {
    ConfusionMatrix confusion;
    Metrics metrics;
    std::vector<ScoreRow> scores;
};

EvaluationResult evaluate_split(const Model& model, const Threshold& threshold,
                                const DatasetSplit& test_split);

// Forward pass rescaled to 8-bit grayscale, written as a binary PGM.
void reconstruct_to_pgm(const Model& model, const Tensor<float>& image,
                        const std::string& path);

// CSV with header epoch,train_loss,val_loss
void write_history_csv(const std::string& path, const TrainingHistory& history);

// CSV with header path,label,loss,prediction
void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& rows);

nlohmann::json threshold_to_json(const Threshold& t);
Threshold threshold_from_json(const nlohmann::json& j);

nlohmann::json metrics_report_json(const EvaluationResult& result, const Threshold& threshold);

} // namespace anomalnet
