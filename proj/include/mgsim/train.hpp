#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "mgsim/dataset.hpp"
#include "mgsim/gru.hpp"

namespace mgsim::train {

struct TrainConfig {
    gru::AdamConfig adam{};  // lr 0.001, betas 0.9/0.999, eps 1e-8
    int epochs = 200;
    std::size_t batch_size = 32;
    std::size_t seq_len = 10;
    std::size_t hidden_size = 50;
    std::uint64_t seed = 1;
    double train_fraction = 0.7;
    gru::CellVariant variant = gru::CellVariant::Standard;

    void validate() const;
};

/// Everything inference needs: weights, the cell variant and the input scaling.
struct GruModel {
    gru::GruParams params;
    gru::CellVariant variant = gru::CellVariant::Standard;
    data::Normalizer norm;

    double predict(const std::vector<ChannelVector>& raw_frames) const;
    BreakerStatus classify(const std::vector<ChannelVector>& raw_frames) const;

    friend bool operator==(const GruModel&, const GruModel&) = default;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    std::optional<double> test_loss;
    std::optional<double> test_accuracy;
};

struct TrainResult {
    GruModel model;
    std::vector<EpochLog> log;
};

class TrainingDiverged : public RuntimeFailure {
public:
    TrainingDiverged(int epoch, std::size_t batch);

    int epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    int epoch_;
    std::size_t batch_;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Minibatch BPTT with Adam on the MSE between sigmoid output and label.
/// Normalization is fitted on `train_set` and stored with the model. When
/// `test_set` is given its loss/accuracy are logged every epoch.
TrainResult train(const data::Dataset& train_set, const data::Dataset* test_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct Evaluation {
    std::size_t windows = 0;
    std::size_t correct = 0;
    double mse = 0.0;
    // confusion[truth][predicted], index = label
    std::size_t confusion[2][2] = {{0, 0}, {0, 0}};

    double accuracy() const noexcept { return windows == 0 ? 0.0 : static_cast<double>(correct) / windows; }
};

/// `perturb`, when set, is applied to each raw frame before inference.
Evaluation evaluate(const GruModel& model, const data::Dataset& dataset,
                    const std::function<void(ChannelVector&)>& perturb = {});

void write_log_csv(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace mgsim::train
