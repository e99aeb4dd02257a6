#include "mgsim/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

namespace mgsim::train {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (hidden_size < 1 || seq_len < 1) throw ConfigError("hidden_size and seq_len must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0,1)");
    if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
}

double GruModel::predict(const std::vector<ChannelVector>& raw_frames) const {
    return gru::forward_sequence(norm.to_sequence(raw_frames), params, variant);
}

BreakerStatus GruModel::classify(const std::vector<ChannelVector>& raw_frames) const {
    return predict(raw_frames) >= 0.5 ? BreakerStatus::Islanded : BreakerStatus::GridConnected;
}

TrainingDiverged::TrainingDiverged(int epoch, std::size_t batch)
    : RuntimeFailure("training diverged (non-finite loss) at epoch " + std::to_string(epoch) + ", batch " +
                     std::to_string(batch)),
      epoch_(epoch),
      batch_(batch) {}

namespace {

struct Pass {
    double loss = 0.0;
    double accuracy = 0.0;
};

Pass score(const std::vector<gru::Sequence>& seqs, const std::vector<int>& labels, const GruModel& model) {
    Pass p;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        const double y = gru::forward_sequence(seqs[i], model.params, model.variant);
        const double e = y - labels[i];
        p.loss += e * e;
        if ((y >= 0.5 ? 1 : 0) == labels[i]) ++correct;
    }
    if (!seqs.empty()) {
        p.loss /= static_cast<double>(seqs.size());
        p.accuracy = static_cast<double>(correct) / static_cast<double>(seqs.size());
    }
    return p;
}

void prepare(const data::Dataset& ds, const data::Normalizer& norm, std::vector<gru::Sequence>& seqs,
             std::vector<int>& labels) {
    seqs.clear();
    labels.clear();
    for (const auto& w : ds.windows) {
        seqs.push_back(norm.to_sequence(w.frames));
        labels.push_back(w.label());
    }
}

}  // namespace

TrainResult train(const data::Dataset& train_set, const data::Dataset* test_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_set.empty()) throw DataError("training set is empty");

    std::mt19937_64 rng(cfg.seed);
    TrainResult result;
    GruModel& model = result.model;
    model.variant = cfg.variant;
    model.norm = data::Normalizer::fit(train_set);
    model.params = gru::GruParams::glorot(kChannelCount, cfg.hidden_size, rng);

    std::vector<gru::Sequence> train_seqs, test_seqs;
    std::vector<int> train_labels, test_labels;
    prepare(train_set, model.norm, train_seqs, train_labels);
    if (test_set) prepare(*test_set, model.norm, test_seqs, test_labels);

    gru::AdamMoments moments = gru::AdamMoments::for_params(model.params);
    gru::GruParams grads = gru::GruParams::zeros(kChannelCount, cfg.hidden_size);
    std::vector<std::size_t> order(train_seqs.size());
    std::iota(order.begin(), order.end(), 0);
    std::uint64_t t = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t epoch_correct = 0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const double n = static_cast<double>(end - start);
            grads.set_zero();
            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = order[k];
                const gru::SequenceCache cache = gru::forward_sequence_cached(train_seqs[i], model.params, model.variant);
                const double e = cache.output - train_labels[i];
                batch_loss += e * e;
                if ((cache.output >= 0.5 ? 1 : 0) == train_labels[i]) ++epoch_correct;
                // d/dy of mean squared error over the batch
                gru::backward(cache, model.params, model.variant, 2.0 * e / n, grads);
            }
            if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch, batch_index);
            epoch_loss += batch_loss;
            gru::adam_step(model.params, grads, moments, ++t, cfg.adam);
            if (!model.params.all_finite()) throw TrainingDiverged(epoch, batch_index);
        }

        EpochLog entry;
        entry.epoch = epoch;
        // Running averages over the epoch's minibatches, as toolkits report them.
        entry.train_loss = epoch_loss / static_cast<double>(order.size());
        entry.train_accuracy = static_cast<double>(epoch_correct) / static_cast<double>(order.size());
        if (test_set && !test_seqs.empty()) {
            const Pass p = score(test_seqs, test_labels, model);
            entry.test_loss = p.loss;
            entry.test_accuracy = p.accuracy;
        }
        result.log.push_back(entry);
        if (on_epoch) on_epoch(entry);
    }
    return result;
}

Evaluation evaluate(const GruModel& model, const data::Dataset& dataset,
                    const std::function<void(ChannelVector&)>& perturb) {
    if (dataset.empty()) throw DataError("evaluation dataset is empty");
    Evaluation ev;
    for (const auto& w : dataset.windows) {
        std::vector<ChannelVector> frames = w.frames;
        if (perturb) {
            for (auto& f : frames) perturb(f);
        }
        const double y = model.predict(frames);
        const int predicted = y >= 0.5 ? 1 : 0;
        const double e = y - w.label();
        ev.mse += e * e;
        ++ev.windows;
        if (predicted == w.label()) ++ev.correct;
        ++ev.confusion[w.label()][predicted];
    }
    ev.mse /= static_cast<double>(ev.windows);
    return ev;
}

void write_log_csv(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    out << "epoch,train_loss,train_accuracy,test_loss,test_accuracy\n";
    char buf[160];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%d,%.10g,%.6f,", e.epoch, e.train_loss, e.train_accuracy);
        out << buf;
        if (e.test_loss) {
            std::snprintf(buf, sizeof buf, "%.10g,%.6f", *e.test_loss, *e.test_accuracy);
            out << buf;
        } else {
            out << ',';
        }
        out << '\n';
    }
}

}  // namespace mgsim::train
