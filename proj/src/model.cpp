#include "stablehash/model.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace stablehash {

using nlohmann::json;

ArchConfig ArchConfig::desk() {
  ArchConfig a;
  a.conv = {{8, true}, {16, true}, {32, true}};
  a.fc_hidden = 96;
  return a;
}

ArchConfig ArchConfig::deep8() {
  ArchConfig a;
  a.conv = {{16, false}, {16, true}, {32, false}, {32, true},
            {64, false}, {64, true}, {128, false}, {128, true}};
  a.fc_hidden = 512;
  return a;
}

ArchConfig ArchConfig::parse(const std::string& text) {
  if (text == "desk") return desk();
  if (text == "deep8") return deep8();
  ArchConfig a;
  std::string convs = text;
  a.fc_hidden = 128;
  if (const auto slash = text.find('/'); slash != std::string::npos) {
    convs = text.substr(0, slash);
    a.fc_hidden = std::stoi(text.substr(slash + 1));
  }
  std::istringstream in(convs);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    ConvBlock b;
    if (tok.back() == 'p') {
      b.pool = true;
      tok.pop_back();
    }
    try {
      b.channels = std::stoi(tok);
    } catch (const std::exception&) {
      throw ConfigError("bad conv block '" + tok + "' in arch '" + text + "'");
    }
    if (b.channels <= 0) throw ConfigError("conv channels must be positive");
    a.conv.push_back(b);
  }
  if (a.conv.empty()) throw ConfigError("arch '" + text + "' has no conv blocks");
  if (a.fc_hidden <= 0) throw ConfigError("fc hidden width must be positive");
  return a;
}

std::string ArchConfig::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(conv[i].channels);
    if (conv[i].pool) out += "p";
  }
  out += "/" + std::to_string(fc_hidden);
  return out;
}

BitString binarize(const Eigen::VectorXd& t) {
  BitString code(static_cast<std::size_t>(t.size()));
  for (Eigen::Index j = 0; j < t.size(); ++j) {
    code.set_bit(static_cast<std::size_t>(j), t[j] >= 0.0);
  }
  return code;
}

Eigen::VectorXd code_to_reals(const BitString& code) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(code.size()));
  for (std::size_t j = 0; j < code.size(); ++j) {
    s[static_cast<Eigen::Index>(j)] = code.bit(j) ? 1.0 : -1.0;
  }
  return s;
}

DfhModel DfhModel::build(const ModelConfig& cfg) {
  if (cfg.code_bits <= 0) throw ConfigError("code length must be positive");
  if (cfg.input_rows < 1 || cfg.input_cols < 1) {
    throw ConfigError("input shape must be positive");
  }
  if (cfg.sigma2 <= 0) throw ConfigError("sigma2 must be positive");
  if (cfg.eta <= 0) throw ConfigError("eta must be positive");
  if (cfg.arch.conv.empty()) throw ConfigError("architecture needs conv blocks");
  if (cfg.arch.fc_hidden <= 0) throw ConfigError("fc hidden width must be positive");

  DfhModel m;
  m.cfg_ = cfg;
  Rng rng(splitmix64(cfg.init_seed ^ 0x9E3779B97F4A7C15ULL));

  int h = cfg.input_rows, w = cfg.input_cols, ch = 1;
  int stage = 0;
  for (const auto& block : cfg.arch.conv) {
    ++stage;
    m.net_.add(std::make_unique<nn::Conv2d<double>>(ch, block.channels, 3, rng));
    m.net_.add(std::make_unique<nn::BatchNorm<double>>(
        block.channels, 0.9, 1e-5, std::to_string(stage)));
    m.net_.add(std::make_unique<nn::Relu<double>>());
    ch = block.channels;
    if (block.pool) {
      if (h < 2 || w < 2) {
        throw ConfigError("pooling stage " + std::to_string(stage) +
                          " exhausts spatial dimensions (" + std::to_string(h) +
                          "x" + std::to_string(w) + ")");
      }
      m.net_.add(std::make_unique<nn::MaxPool2<double>>());
      h /= 2;
      w /= 2;
    }
  }
  m.net_.add(std::make_unique<nn::Flatten<double>>());
  m.net_.add(std::make_unique<nn::Dense<double>>(ch * h * w, cfg.arch.fc_hidden,
                                                 rng, "1"));
  m.net_.add(std::make_unique<nn::BatchNorm<double>>(cfg.arch.fc_hidden, 0.9,
                                                     1e-5, "fc"));
  m.net_.add(std::make_unique<nn::Relu<double>>());
  // Small hash-layer init keeps early activations near zero so the
  // regression term starts from ~0 instead of crushing the features.
  auto hash_layer = std::make_unique<nn::Dense<double>>(cfg.arch.fc_hidden,
                                                        cfg.code_bits, rng, "hash");
  hash_layer->weight() *= 0.05;
  m.net_.add(std::move(hash_layer));
  return m;
}

void DfhModel::check_input(const BiometricSample& x) const {
  if (x.pixels.rows() != cfg_.input_rows || x.pixels.cols() != cfg_.input_cols) {
    throw InputError("sample shape " + std::to_string(x.pixels.rows()) + "x" +
                     std::to_string(x.pixels.cols()) + " does not match model input " +
                     std::to_string(cfg_.input_rows) + "x" +
                     std::to_string(cfg_.input_cols));
  }
}

HashOutput DfhModel::forward(const BiometricSample& x) const {
  check_input(x);
  nn::Tensor<double> in;
  in.channels = 1;
  in.height = cfg_.input_rows;
  in.width = cfg_.input_cols;
  in.data = Eigen::Map<const Eigen::VectorXd>(x.pixels.data(), x.pixels.size());
  const auto out = net_.infer(std::move(in));
  HashOutput h;
  h.t = out.data.col(0);
  h.code = binarize(h.t);
  return h;
}

Eigen::MatrixXd DfhModel::infer_batch(const Eigen::MatrixXd& flat_images) const {
  if (flat_images.rows() !=
      static_cast<Eigen::Index>(cfg_.input_rows) * cfg_.input_cols) {
    throw InputError("batch row count does not match model input shape");
  }
  nn::Tensor<double> in;
  in.channels = 1;
  in.height = cfg_.input_rows;
  in.width = cfg_.input_cols;
  in.data = flat_images;
  return net_.infer(std::move(in)).data;
}

void DfhModel::init_class_params(int m, std::uint64_t seed) {
  if (m <= 0) throw InputError("class count must be positive");
  if (centers_.rows() == m && centers_.cols() == cfg_.code_bits) return;
  Rng rng(splitmix64(seed ^ 0xCE17E25ULL));
  centers_.resize(m, cfg_.code_bits);
  for (Eigen::Index i = 0; i < centers_.rows(); ++i) {
    for (Eigen::Index j = 0; j < centers_.cols(); ++j) {
      centers_(i, j) = rng.normal();
    }
  }
  reg_ = Eigen::MatrixXd::Zero(m, cfg_.code_bits);
  class_sigma2_ = Eigen::VectorXd::Constant(m, cfg_.sigma2);
}

// ---------------------------------------------------------------------------
// Checkpoint format: a json header line describing config and tensor sizes,
// a NUL byte, then raw little-endian float64 tensor data in header order.

namespace {
constexpr const char* kCheckpointFormat = "stablehash-checkpoint";
constexpr int kCheckpointVersion = 1;

void append_tensor(std::vector<std::pair<std::string, const Eigen::MatrixXd*>>& list,
                   const std::string& name, const Eigen::MatrixXd& m) {
  list.emplace_back(name, &m);
}
}  // namespace

void DfhModel::save(const std::string& path) const {
  auto& self = const_cast<DfhModel&>(*this);
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> tensors;
  for (const auto& p : self.net_.params()) append_tensor(tensors, p.name, *p.value);
  for (const auto& b : self.net_.buffers()) append_tensor(tensors, b.name, *b.value);
  append_tensor(tensors, "centers", centers_);
  append_tensor(tensors, "regression", reg_);
  Eigen::MatrixXd sigma_mat = class_sigma2_;
  append_tensor(tensors, "class_sigma2", sigma_mat);

  json header;
  header["format"] = kCheckpointFormat;
  header["version"] = kCheckpointVersion;
  header["input_rows"] = cfg_.input_rows;
  header["input_cols"] = cfg_.input_cols;
  header["code_bits"] = cfg_.code_bits;
  header["arch"] = cfg_.arch.to_string();
  header["sigma2"] = cfg_.sigma2;
  header["eta"] = cfg_.eta;
  header["per_class_sigma"] = cfg_.per_class_sigma;
  header["init_seed"] = cfg_.init_seed;
  header["classes"] = static_cast<int>(centers_.rows());
  json tensor_list = json::array();
  for (const auto& [name, mat] : tensors) {
    tensor_list.push_back({{"name", name},
                           {"rows", mat->rows()},
                           {"cols", mat->cols()}});
  }
  header["tensors"] = tensor_list;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  const std::string head = header.dump();
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.put('\0');
  for (const auto& [name, mat] : tensors) {
    out.write(reinterpret_cast<const char*>(mat->data()),
              static_cast<std::streamsize>(sizeof(double) * mat->size()));
  }
  if (!out) throw IoError("short write to checkpoint '" + path + "'");
}

DfhModel DfhModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::string head;
  std::getline(in, head, '\0');
  json header;
  try {
    header = json::parse(head);
  } catch (const json::exception&) {
    throw IoError("checkpoint '" + path + "' has a corrupt header");
  }
  if (header.value("format", "") != kCheckpointFormat) {
    throw IoError("'" + path + "' is not a model checkpoint");
  }
  if (header.value("version", -1) != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " +
                  std::to_string(header.value("version", -1)));
  }

  ModelConfig cfg;
  cfg.input_rows = header.at("input_rows").get<int>();
  cfg.input_cols = header.at("input_cols").get<int>();
  cfg.code_bits = header.at("code_bits").get<int>();
  cfg.arch = ArchConfig::parse(header.at("arch").get<std::string>());
  cfg.sigma2 = header.at("sigma2").get<double>();
  cfg.eta = header.at("eta").get<double>();
  cfg.per_class_sigma = header.at("per_class_sigma").get<bool>();
  cfg.init_seed = header.at("init_seed").get<std::uint64_t>();

  DfhModel m = build(cfg);
  const int classes = header.at("classes").get<int>();
  if (classes > 0) {
    m.centers_.resize(classes, cfg.code_bits);
    m.reg_.resize(classes, cfg.code_bits);
    m.class_sigma2_.resize(classes);
  }

  std::vector<std::pair<std::string, Eigen::MatrixXd*>> tensors;
  for (const auto& p : m.net_.params()) tensors.emplace_back(p.name, p.value);
  for (const auto& b : m.net_.buffers()) tensors.emplace_back(b.name, b.value);
  tensors.emplace_back("centers", &m.centers_);
  tensors.emplace_back("regression", &m.reg_);
  Eigen::MatrixXd sigma_mat(classes, 1);

  const auto& tensor_list = header.at("tensors");
  if (tensor_list.size() != tensors.size() + 1) {
    throw IoError("checkpoint tensor list does not match architecture");
  }
  for (std::size_t i = 0; i < tensors.size() + 1; ++i) {
    const auto& spec = tensor_list[i];
    const std::string name = spec.at("name").get<std::string>();
    const Eigen::Index rows = spec.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = spec.at("cols").get<Eigen::Index>();
    Eigen::MatrixXd* target =
        i < tensors.size() ? tensors[i].second : &sigma_mat;
    const std::string expect = i < tensors.size() ? tensors[i].first : "class_sigma2";
    if (name != expect) {
      throw IoError("checkpoint tensor '" + name + "' does not match expected '" +
                    expect + "'");
    }
    if (i < tensors.size() && (target->rows() != rows || target->cols() != cols)) {
      throw IoError("checkpoint tensor '" + name + "' has wrong shape");
    }
    target->resize(rows, cols);
    in.read(reinterpret_cast<char*>(target->data()),
            static_cast<std::streamsize>(sizeof(double) * rows * cols));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * rows * cols)) {
      throw IoError("checkpoint '" + path + "' is truncated");
    }
  }
  m.class_sigma2_ = sigma_mat.col(0);
  return m;
}

}  // namespace stablehash
