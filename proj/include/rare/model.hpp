#pragma once

// The trainable risk-aware recommender. Every prospect-theory parameter of a
// (user, item) pair is sigmoid(g + b_u + l_v + p_u . q_v); each user also
// owns a free reference rating. Choices among a positive and sampled
// negatives follow a multinomial logit over prospect values.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "rare/data.hpp"
#include "rare/matrix.hpp"
#include "rare/prospect.hpp"
#include "rare/riskdist.hpp"

namespace rare {

double sigmoid(double x);
double logit(double p);

/// Global bias, user/item biases and user/item latent factors of one
/// parameter. Holds raw (unconstrained) values.
struct FactorizedParameter {
  double global_bias = 0.0;
  std::vector<double> user_bias;
  std::vector<double> item_bias;
  Matrix user_factors;
  Matrix item_factors;

  FactorizedParameter() = default;
  FactorizedParameter(std::size_t n, std::size_t m, std::size_t k);

  double raw(std::size_t u, std::size_t v) const;
  std::size_t size() const;
  bool operator==(const FactorizedParameter&) const = default;
};

/// sigmoid of the raw factorized score; always in (0,1).
double param_at(const FactorizedParameter& theta, std::size_t u, std::size_t v);

/// All raw learnable scalars: five factorized tables plus the reference
/// vector. Also used as the gradient container.
struct ParameterTables {
  std::array<FactorizedParameter, kNumPtParams> theta;
  std::vector<double> reference;

  ParameterTables() = default;
  ParameterTables(std::size_t n, std::size_t m, std::size_t k);

  FactorizedParameter& operator[](PtParam p) { return theta[static_cast<std::size_t>(p)]; }
  const FactorizedParameter& operator[](PtParam p) const {
    return theta[static_cast<std::size_t>(p)];
  }

  std::size_t size() const;
  /// Fixed traversal: alpha..delta tables (global, user bias, item bias,
  /// user factors, item factors), then references.
  std::vector<double> flatten() const;
  void assign(std::span<const double> values);
  double squared_norm() const;
  /// this += a * other
  void axpy(double a, const ParameterTables& other);
  bool all_finite() const;

  bool operator==(const ParameterTables&) const = default;
};

class RareModel {
 public:
  RareModel() = default;
  /// All-zero raw parameters and zero references.
  RareModel(std::size_t num_users, std::size_t num_items, std::size_t k, AblationMode mode);

  /// Starting point for training: sigmoid(g) = 0.7 for alpha and beta, 0.5
  /// for lambda, gamma and delta; zero biases; factors ~ N(0, 0.01^2);
  /// references at 3.0.
  static RareModel initialized(std::size_t num_users, std::size_t num_items, std::size_t k,
                               AblationMode mode, std::uint64_t seed);

  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }
  std::size_t k() const { return k_; }
  AblationMode mode() const { return mode_; }

  ParameterTables& params() { return params_; }
  const ParameterTables& params() const { return params_; }

  /// 5 + 5(n+m)(k+1) + n
  std::size_t parameter_count() const { return params_.size(); }

  /// Whether the user/item parts of `p` enter the prospect value. In the
  /// no-vf ablation alpha, beta and lambda collapse to sigmoid(global bias).
  bool personalized(PtParam p) const;

  ProspectParams prospect_params(std::size_t u, std::size_t v) const;
  double reference(std::size_t u) const { return params_.reference[u]; }

  double score(std::size_t u, std::size_t v, const ItemSide& items) const;
  std::vector<double> forward(std::size_t u, std::span<const std::size_t> item_ids,
                              const ItemSide& items) const;

  bool operator==(const RareModel&) const = default;

 private:
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::size_t k_ = 0;
  AblationMode mode_ = AblationMode::Full;
  ParameterTables params_;
};

/// Softmax with max subtraction.
std::vector<double> mnl_probability(std::span<const double> values);

/// One observed choice: `positive` picked over `negatives`.
struct ChoiceExample {
  std::size_t user = 0;
  std::size_t positive = 0;
  std::vector<std::size_t> negatives;
};

/// -sum log P(positive chosen) + reg_weight * ||params||^2
double loss(const RareModel& model, std::span<const ChoiceExample> batch, const ItemSide& items,
            double reg_weight);

struct LossGradient {
  double loss = 0.0;       // full objective, as loss()
  double data_loss = 0.0;  // negative log-likelihood part only
  ParameterTables gradient;
};

/// Analytic gradient of loss() with respect to every raw scalar.
LossGradient gradients(const RareModel& model, std::span<const ChoiceExample> batch,
                       const ItemSide& items, double reg_weight);

struct TrainConfig {
  std::size_t k = 8;
  double learning_rate = 1e-2;
  double reg_weight = 1e-4;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::size_t negatives_per_positive = 2;
  std::uint64_t seed = 42;
  std::size_t patience_epochs = 20;
  AblationMode mode = AblationMode::Full;
  /// Validation negatives per user when tracking NDCG@10.
  std::size_t eval_negatives = 100;
  std::size_t threads = 1;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean negative log-likelihood per example
  double val_ndcg10 = 0.0;
  double elapsed_ms = 0.0;
};

struct TrainResult {
  RareModel model;  // best validation snapshot
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_ndcg10 = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Mini-batch SGD with fresh negatives every epoch and early stopping on
/// validation NDCG@10. Throws DivergenceError on a non-finite loss.
TrainResult train(const TrainConfig& config, const SplitDataset& split, const ItemSide& items,
                  const EpochCallback& on_epoch = {});

/// `epoch,train_loss,val_ndcg10,elapsed_ms`
void write_train_log(std::ostream& out, std::span<const EpochLog> log);

}  // namespace rare
