#include "stablehash/types.hpp"

#include <cmath>
#include <set>

namespace stablehash {

void BiometricSample::validate() const {
  for (Eigen::Index j = 0; j < pixels.cols(); ++j) {
    for (Eigen::Index i = 0; i < pixels.rows(); ++i) {
      const double v = pixels(i, j);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw InputError("sample intensity out of [0,1] at (" +
                         std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
}

std::string split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kUnknown: return "unknown";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  if (name == "unknown") return Split::kUnknown;
  throw InputError("unknown split tag '" + name + "'");
}

void Dataset::assign_labels() {
  label_of_.clear();
  std::set<std::string> train_users;
  for (const auto& r : records_) {
    if (r.split == Split::kTrain) train_users.insert(r.user_id);
  }
  int next = 0;
  for (const auto& u : train_users) label_of_[u] = next++;
  for (auto& r : records_) {
    if (r.split == Split::kUnknown) {
      r.sample.label = -1;
      continue;
    }
    auto it = label_of_.find(r.user_id);
    if (it == label_of_.end()) {
      throw InputError("user '" + r.user_id +
                       "' appears in split '" + split_name(r.split) +
                       "' but has no train samples");
    }
    r.sample.label = it->second;
  }
}

std::vector<const DatasetRecord*> Dataset::by_split(Split s) const {
  std::vector<const DatasetRecord*> out;
  for (const auto& r : records_) {
    if (r.split == s) out.push_back(&r);
  }
  return out;
}

Batch make_batch(const std::vector<const BiometricSample*>& samples) {
  if (samples.empty()) throw InputError("empty batch");
  const auto rows = samples.front()->pixels.rows();
  const auto cols = samples.front()->pixels.cols();
  Batch b;
  b.x.resize(rows * cols, static_cast<Eigen::Index>(samples.size()));
  b.labels.resize(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& img = samples[i]->pixels;
    if (img.rows() != rows || img.cols() != cols) {
      throw InputError("batch mixes image shapes");
    }
    b.x.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXd>(img.data(), img.size());
    b.labels[static_cast<Eigen::Index>(i)] = samples[i]->label;
  }
  return b;
}

}  // namespace stablehash
