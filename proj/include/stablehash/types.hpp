#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "stablehash/errors.hpp"

namespace stablehash {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Image = Eigen::MatrixXd;  // rows = height, cols = width, values in [0,1]

/// One preprocessed grayscale sample with its class label.
struct BiometricSample {
  Image pixels;
  int label = -1;  // class id in [0, m); -1 for unknown-split users

  /// Checks intensities are finite and within [0,1].
  void validate() const;
};

enum class Split { kTrain, kTest, kUnknown };

std::string split_name(Split s);
Split split_from_name(const std::string& name);

/// A dataset record ties a sample to a user id and an evaluation split.
struct DatasetRecord {
  BiometricSample sample;
  std::string user_id;
  Split split = Split::kTrain;
};

/// In-memory dataset. Labels are assigned over train-split users in sorted
/// user-id order; unknown-split users keep label -1.
class Dataset {
public:
  void add(DatasetRecord rec) { records_.push_back(std::move(rec)); }

  const std::vector<DatasetRecord>& records() const { return records_; }
  std::vector<DatasetRecord>& records() { return records_; }
  std::size_t size() const { return records_.size(); }

  /// Assigns integer labels to train/test users and -1 to unknown users.
  /// Throws InputError when a test-split user never appears in train.
  void assign_labels();

  int class_count() const { return static_cast<int>(label_of_.size()); }
  const std::map<std::string, int>& label_map() const { return label_of_; }

  std::vector<const DatasetRecord*> by_split(Split s) const;

private:
  std::vector<DatasetRecord> records_;
  std::map<std::string, int> label_of_;
};

/// A mini-batch view: columns of X are flattened images (column-major
/// pixel order), y holds the class labels.
struct Batch {
  Eigen::MatrixXd x;       // (a*b) x batch
  Eigen::VectorXi labels;  // batch
};

/// Flattens samples into a batch matrix. All samples must share one shape.
Batch make_batch(const std::vector<const BiometricSample*>& samples);

}  // namespace stablehash
