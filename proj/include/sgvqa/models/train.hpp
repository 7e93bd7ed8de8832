#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sgvqa/models/model.hpp"
#include "sgvqa/nn/params.hpp"

namespace sgvqa::models {

// Serves the per-sample forward inputs. Training-time providers may vary the
// graph per epoch (curriculum); returned pointers stay valid until the next
// call on the same provider.
class InputProvider {
 public:
  virtual ~InputProvider() = default;
  virtual SampleInputs inputs_for(const QuestionSample& sample, int epoch, bool training) = 0;
};

struct TrainConfig {
  int epochs = 15;       // reference-scale defaults; desk configs override
  int batch_size = 128;
  uint64_t seed = 0;
  double early_stop_accuracy = -1.0;  // <0 disables
  std::string regime = "GT";
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  std::string regime;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_val_accuracy = 0.0;
};

// Cross-entropy training with per-batch gradient accumulation in a fixed
// order, so identical seeds give identical logs. The model is left holding
// the best-validation parameters. Aborts on non-finite loss.
TrainResult train(QaModel& model, const std::vector<QuestionSample>& train_samples,
                  const std::vector<QuestionSample>& val_samples, InputProvider& provider,
                  const TrainConfig& config, const nn::OptimizerSpec& optimizer,
                  std::ostream* log = nullptr);

double evaluate_accuracy(const QaModel& model, const std::vector<QuestionSample>& samples,
                         InputProvider& provider);

struct Prediction {
  std::string question_id;
  std::string answer;
  double probability = 0.0;
};

std::vector<Prediction> predict_all(const QaModel& model,
                                    const std::vector<QuestionSample>& samples,
                                    InputProvider& provider);

// One tab-separated record per line: question_id, answer, probability.
void write_predictions(const std::vector<Prediction>& predictions, const std::string& path);
std::vector<Prediction> read_predictions(const std::string& path);

void write_training_log(const TrainResult& result, const std::string& path);

}  // namespace sgvqa::models
