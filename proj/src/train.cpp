#include "stablehash/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "stablehash/image.hpp"
#include "stablehash/loss.hpp"
#include "stablehash/rng.hpp"

namespace stablehash {

std::string LossCombo::name() const {
  std::string out = "L1";
  if (regression) out += "+L2";
  if (quantization) out += "+L3";
  return out;
}

namespace {

struct AdamSlot {
  Eigen::MatrixXd* value;
  Eigen::MatrixXd* grad;
  Eigen::MatrixXd m1, m2;
};

void adam_step(std::vector<AdamSlot>& slots, const TrainConfig& cfg, int t,
               double lr) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& s : slots) {
    s.m1 = cfg.beta1 * s.m1 + (1.0 - cfg.beta1) * (*s.grad);
    s.m2 = cfg.beta2 * s.m2 + (1.0 - cfg.beta2) * s.grad->cwiseProduct(*s.grad);
    const Eigen::ArrayXXd mhat = s.m1.array() / bc1;
    const Eigen::ArrayXXd vhat = s.m2.array() / bc2;
    s.value->array() -= lr * mhat / (vhat.sqrt() + cfg.adam_eps);
  }
}

}  // namespace

CodeStats stable_code_stats(const DfhModel& model,
                            const std::vector<const DatasetRecord*>& records) {
  std::map<std::string, std::map<BitString, int>> histograms;
  for (const auto* rec : records) {
    histograms[rec->user_id][model.forward(rec->sample).code] += 1;
  }
  CodeStats stats;
  stats.users = static_cast<int>(histograms.size());
  std::map<BitString, int> modal_count;
  int stable_samples = 0, total_samples = 0;
  std::vector<BitString> modal_codes;
  for (const auto& [user, hist] : histograms) {
    const auto modal = std::max_element(
        hist.begin(), hist.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    modal_count[modal->first] += 1;
    for (const auto& [code, n] : hist) {
      total_samples += n;
      if (code == modal->first) stable_samples += n;
    }
    modal_codes.push_back(modal->first);
  }
  stats.samples = total_samples;
  stats.stability = total_samples ? double(stable_samples) / total_samples : 0.0;
  int unique_users = 0;
  for (const auto& code : modal_codes) {
    if (modal_count[code] == 1) ++unique_users;
  }
  stats.distinctness = stats.users ? double(unique_users) / stats.users : 0.0;
  return stats;
}

TrainLog train(DfhModel& model, const Dataset& dataset, const TrainConfig& cfg) {
  TrainLog log;
  if (cfg.epochs < 0) throw InputError("epoch count must be non-negative");
  const auto train_records = dataset.by_split(Split::kTrain);
  if (train_records.empty()) throw InputError("training set is empty");
  const int m = dataset.class_count();
  if (m < 1) throw InputError("dataset has no labeled classes");
  if (cfg.epochs == 0) return log;
  if (cfg.batch_size < 1) throw InputError("batch size must be positive");

  std::vector<const BiometricSample*> samples;
  samples.reserve(train_records.size());
  for (const auto* r : train_records) samples.push_back(&r->sample);
  const Batch all = make_batch(samples);
  for (Eigen::Index i = 0; i < all.labels.size(); ++i) {
    if (all.labels[i] < 0 || all.labels[i] >= m) {
      throw InputError("train sample with label outside [0,m)");
    }
  }

  model.init_class_params(m, cfg.seed);

  Eigen::MatrixXd grad_centers = Eigen::MatrixXd::Zero(m, model.code_bits());
  Eigen::MatrixXd grad_reg = Eigen::MatrixXd::Zero(m, model.code_bits());

  std::vector<AdamSlot> slots;
  for (auto& p : model.net().params()) {
    slots.push_back({p.value, p.grad,
                     Eigen::MatrixXd::Zero(p.value->rows(), p.value->cols()),
                     Eigen::MatrixXd::Zero(p.value->rows(), p.value->cols())});
  }
  slots.push_back({&model.centers(), &grad_centers,
                   Eigen::MatrixXd::Zero(m, model.code_bits()),
                   Eigen::MatrixXd::Zero(m, model.code_bits())});
  if (cfg.losses.regression) {
    slots.push_back({&model.regression(), &grad_reg,
                     Eigen::MatrixXd::Zero(m, model.code_bits()),
                     Eigen::MatrixXd::Zero(m, model.code_bits())});
  }

  const Eigen::Index n = all.x.cols();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(splitmix64(cfg.seed ^ 0x7261696E5F726EULL));

  const VectorX<double>* per_class =
      model.config().per_class_sigma ? &model.per_class_sigma2() : nullptr;

  int step = 0;
  const int decay_epoch = cfg.decay_factor != 1.0
                              ? static_cast<int>(cfg.decay_at * cfg.epochs)
                              : cfg.epochs + 1;
  const int rows = model.config().input_rows;
  const int cols = model.config().input_cols;
  Rng augment_rng(splitmix64(cfg.seed ^ 0x617567ULL));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = epoch > decay_epoch
                          ? cfg.learning_rate * cfg.decay_factor
                          : cfg.learning_rate;
    shuffle_rng.shuffle(order);
    Eigen::MatrixXd epoch_x;
    if (cfg.augment) {
      epoch_x.resize(all.x.rows(), all.x.cols());
      for (Eigen::Index i = 0; i < all.x.cols(); ++i) {
        const Eigen::Map<const Image> img(all.x.col(i).data(), rows, cols);
        const Image view = perturb_image(img, cfg.augment_noise, augment_rng);
        epoch_x.col(i) = Eigen::Map<const Eigen::VectorXd>(view.data(), view.size());
      }
    }
    const Eigen::MatrixXd& source_x = cfg.augment ? epoch_x : all.x;
    EpochStats es;
    es.epoch = epoch;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Eigen::MatrixXd xb(all.x.rows(), count);
      Eigen::VectorXi yb(count);
      for (Eigen::Index k = 0; k < count; ++k) {
        xb.col(k) = source_x.col(order[static_cast<std::size_t>(start + k)]);
        yb[k] = all.labels[order[static_cast<std::size_t>(start + k)]];
      }

      model.net().zero_grads();
      grad_centers.setZero();
      grad_reg.setZero();

      nn::Tensor<double> in;
      in.channels = 1;
      in.height = model.config().input_rows;
      in.width = model.config().input_cols;
      in.data = std::move(xb);
      nn::Mode mode;
      mode.update_running = true;
      nn::Tensor<double> t_out = model.net().forward(std::move(in), mode);

      auto cw = class_wise_loss<double>(t_out.data, yb, model.centers(),
                                        model.config().sigma2, per_class);
      Eigen::MatrixXd grad_t = cw.grad_t;
      grad_centers += cw.grad_centers;
      double total = cw.value;
      es.class_wise += cw.value;

      if (cfg.losses.regression) {
        auto reg = regression_loss<double>(t_out.data, yb, model.regression());
        grad_t += reg.grad_t;
        grad_reg += reg.grad_w;
        total += reg.value;
        es.regression += reg.value;
      }
      if (cfg.losses.quantization) {
        auto q = quantization_loss<double>(t_out.data, model.config().eta);
        grad_t += q.grad_t;
        total += q.value;
        es.quantization += q.value;
      }
      es.total += total;

      if (!std::isfinite(total)) {
        throw TrainingError("training diverged (non-finite loss) at epoch " +
                                std::to_string(epoch),
                            epoch);
      }

      nn::Tensor<double> grad_tensor = t_out;
      grad_tensor.data = std::move(grad_t);
      model.net().backward(std::move(grad_tensor));
      adam_step(slots, cfg, ++step, lr);
    }
    log.epochs.push_back(es);
    if (cfg.probe_every > 0 &&
        (epoch % cfg.probe_every == 0 || epoch == cfg.epochs)) {
      log.probes.emplace_back(epoch, stable_code_stats(model, train_records));
    }
  }
  log.final_stats = log.probes.empty()
                        ? stable_code_stats(model, train_records)
                        : log.probes.back().second;
  return log;
}

}  // namespace stablehash
