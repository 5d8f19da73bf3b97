#pragma once

#include <string>
#include <vector>

#include "stablehash/bits.hpp"
#include "stablehash/nn.hpp"
#include "stablehash/types.hpp"

namespace stablehash {

/// One convolutional block: 3x3 conv -> batch norm -> ReLU, optionally
/// followed by 2x2 max pooling.
struct ConvBlock {
  int channels = 8;
  bool pool = false;
};

struct ArchConfig {
  std::vector<ConvBlock> conv;
  int fc_hidden = 128;

  /// Small stack for desk-scale runs: three pooled conv blocks.
  static ArchConfig desk();
  /// Eight conv layers, pooling after every second one, wide hidden layer.
  static ArchConfig deep8();
  /// "desk", "deep8", or a comma list like "8p,16p,32" ('p' = pooled)
  /// optionally followed by "/hidden".
  static ArchConfig parse(const std::string& text);

  std::string to_string() const;
};

struct ModelConfig {
  int input_rows = 24;
  int input_cols = 24;
  int code_bits = 96;       // L
  ArchConfig arch;
  double sigma2 = 16.0;     // global Gaussian variance of the class-wise loss
  double eta = 0.02;        // quantization weight
  bool per_class_sigma = false;
  std::uint64_t init_seed = 1;
};

/// Output of one forward pass: the real-valued hash activation and its
/// binarization.
struct HashOutput {
  Eigen::VectorXd t;  // length L
  BitString code;     // length L
};

/// Element-wise sign binarization with the sgn(0) = +1 convention:
/// bit j is 1 iff t[j] >= 0.
BitString binarize(const Eigen::VectorXd& t);

/// Maps a {0,1} code to the {-1,+1} reals the quantization loss targets.
Eigen::VectorXd code_to_reals(const BitString& code);

/// The deep fuzzy hashing model: a configurable conv/pool/batch-norm
/// feature extractor, one hidden fully connected layer, and a hash layer
/// of width L. Class centers and the label regression matrix live here as
/// trainable parameters sized at training time.
class DfhModel {
public:
  /// Validates the architecture against the input shape (pooling must not
  /// exhaust spatial dimensions) and initializes all weights.
  static DfhModel build(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  int code_bits() const { return cfg_.code_bits; }
  int class_count() const { return static_cast<int>(centers_.rows()); }

  /// Deterministic inference on a frozen model (batch norm uses running
  /// statistics). Safe for concurrent callers.
  HashOutput forward(const BiometricSample& x) const;

  /// Batched inference; columns of the result are T vectors.
  Eigen::MatrixXd infer_batch(const Eigen::MatrixXd& flat_images) const;

  nn::Net<double>& net() { return net_; }
  const nn::Net<double>& net() const { return net_; }

  Eigen::MatrixXd& centers() { return centers_; }
  const Eigen::MatrixXd& centers() const { return centers_; }
  Eigen::MatrixXd& regression() { return reg_; }
  const Eigen::MatrixXd& regression() const { return reg_; }
  Eigen::VectorXd& per_class_sigma2() { return class_sigma2_; }
  const Eigen::VectorXd& per_class_sigma2() const { return class_sigma2_; }

  /// Allocates centers (normal, scale 0.01) and the regression matrix
  /// (zeros) for m classes. No-op when already sized for m.
  void init_class_params(int m, std::uint64_t seed);

  void save(const std::string& path) const;
  static DfhModel load(const std::string& path);

private:
  DfhModel() = default;

  void check_input(const BiometricSample& x) const;

  ModelConfig cfg_;
  nn::Net<double> net_;
  Eigen::MatrixXd centers_;      // m x L
  Eigen::MatrixXd reg_;          // m x L (W)
  Eigen::VectorXd class_sigma2_; // m, used only when per_class_sigma
};

}  // namespace stablehash
