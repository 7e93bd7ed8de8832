#include "sgvqa/models/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <ostream>

#include "sgvqa/models/heads.hpp"
#include "sgvqa/nn/rng.hpp"
#include "sgvqa/util.hpp"

namespace sgvqa::models {

namespace {

void shuffle_indices(std::vector<int>& idx, nn::Rng& rng) {
  for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i)
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(rng.uniform_index(i + 1))]);
}

struct ValStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

ValStats evaluate(const QaModel& model, const std::vector<QuestionSample>& samples,
                  InputProvider& provider, int epoch) {
  ValStats stats;
  if (samples.empty()) return stats;
  int correct = 0, loss_count = 0;
  for (const QuestionSample& s : samples) {
    SampleInputs in = provider.inputs_for(s, epoch, false);
    AnswerDistribution dist = model.predict(in);
    if (s.answer >= 0) {
      stats.loss += -std::log(std::max(dist.probabilities(s.answer), 1e-300));
      ++loss_count;
      if (dist.argmax() == s.answer) ++correct;
    }
  }
  stats.loss = loss_count > 0 ? stats.loss / loss_count : 0.0;
  stats.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  return stats;
}

}  // namespace

TrainResult train(QaModel& model, const std::vector<QuestionSample>& train_samples,
                  const std::vector<QuestionSample>& val_samples, InputProvider& provider,
                  const TrainConfig& config, const nn::OptimizerSpec& optimizer,
                  std::ostream* log) {
  if (train_samples.empty()) fail("train: no training samples");
  if (config.epochs < 1 || config.batch_size < 1)
    fail("train: epochs and batch_size must be positive");

  nn::AdamOptimizer opt(optimizer);
  nn::Rng order_rng = nn::Rng::from_key(config.seed, "train-order");
  std::vector<int> order(train_samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  TrainResult result;
  std::vector<nn::Matrix> best_params;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_indices(order, order_rng);
    double loss_sum = 0.0;
    int seen = 0, correct = 0;

    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t stop = std::min(order.size(), start + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      model.params().zero_grad();
      for (size_t i = start; i < stop; ++i) {
        const QuestionSample& s = train_samples[static_cast<size_t>(order[i])];
        if (s.answer < 0)
          fail("train: sample '", s.question_id, "' has no answer index");
        SampleInputs in = provider.inputs_for(s, epoch, true);
        nn::Tape tape;
        nn::Var lg = model.logits(tape, in);
        nn::Var loss = cross_entropy(tape, lg, s.answer);
        const double loss_value = loss.value()(0, 0);
        if (!std::isfinite(loss_value))
          fail("train: non-finite loss at epoch ", epoch, ", step ", start / config.batch_size,
               ", sample '", s.question_id, "'");
        tape.backward(loss, inv_batch);
        loss_sum += loss_value;
        ++seen;
        int best = 0;
        const auto& row = lg.value();
        for (int c = 1; c < row.cols(); ++c)
          if (row(0, c) > row(0, best)) best = c;
        if (best == s.answer) ++correct;
      }
      for (auto& p : model.params().all())
        if (!model.is_trainable(*p)) p->grad.setZero();
      opt.step(model.params());
    }

    ValStats val = evaluate(model, val_samples, provider, epoch);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / std::max(1, seen);
    rec.train_accuracy = static_cast<double>(correct) / std::max(1, seen);
    rec.val_loss = val.loss;
    rec.val_accuracy = val.accuracy;
    rec.regime = config.regime;
    result.epochs.push_back(rec);

    if (log)
      (*log) << "epoch " << epoch << " regime=" << config.regime << " train_loss="
             << rec.train_loss << " train_acc=" << rec.train_accuracy
             << " val_loss=" << rec.val_loss << " val_acc=" << rec.val_accuracy << "\n";

    if (rec.val_accuracy > result.best_val_accuracy || result.best_epoch < 0) {
      result.best_val_accuracy = rec.val_accuracy;
      result.best_epoch = epoch;
      best_params.clear();
      for (const auto& p : model.params().all()) best_params.push_back(p->value);
    }
    if (config.early_stop_accuracy >= 0.0 && rec.val_accuracy >= config.early_stop_accuracy)
      break;
  }

  if (!best_params.empty()) {
    const auto& params = model.params().all();
    for (size_t i = 0; i < params.size(); ++i) params[i]->value = best_params[i];
  }
  return result;
}

double evaluate_accuracy(const QaModel& model, const std::vector<QuestionSample>& samples,
                         InputProvider& provider) {
  return evaluate(model, samples, provider, -1).accuracy;
}

std::vector<Prediction> predict_all(const QaModel& model,
                                    const std::vector<QuestionSample>& samples,
                                    InputProvider& provider) {
  std::vector<Prediction> out;
  out.reserve(samples.size());
  for (const QuestionSample& s : samples) {
    SampleInputs in = provider.inputs_for(s, -1, false);
    AnswerDistribution dist = model.predict(in);
    const int best = dist.argmax();
    out.push_back({s.question_id, model.answers().answer(best), dist.probabilities(best)});
  }
  return out;
}

void write_predictions(const std::vector<Prediction>& predictions, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("write_predictions: cannot open '", path, "'");
  out << std::setprecision(17);
  for (const Prediction& p : predictions)
    out << p.question_id << '\t' << p.answer << '\t' << p.probability << '\n';
  if (!out) fail("write_predictions: write failed for '", path, "'");
}

std::vector<Prediction> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("read_predictions: cannot open '", path, "'");
  std::vector<Prediction> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t t1 = line.find('\t');
    const size_t t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      fail("read_predictions: malformed line ", line_no, " in '", path, "'");
    Prediction p;
    p.question_id = line.substr(0, t1);
    p.answer = line.substr(t1 + 1, t2 - t1 - 1);
    p.probability = std::stod(line.substr(t2 + 1));
    out.push_back(std::move(p));
  }
  return out;
}

void write_training_log(const TrainResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("write_training_log: cannot open '", path, "'");
  out << std::setprecision(17);
  for (const EpochRecord& r : result.epochs) {
    nlohmann::json rec{{"epoch", r.epoch},         {"regime", r.regime},
                       {"train_loss", r.train_loss}, {"train_accuracy", r.train_accuracy},
                       {"val_loss", r.val_loss},     {"val_accuracy", r.val_accuracy}};
    out << rec.dump() << '\n';
  }
}

}  // namespace sgvqa::models
