#include "relucode/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "relucode/errors.hpp"
#include "relucode/files.hpp"

namespace relucode {

// ---- synthetic data ----------------------------------------------------------

Dataset make_two_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw ValidationError("two_moons needs at least 2 samples");
  Rng rng(seed);
  const std::size_t n_upper = n / 2;
  const std::size_t n_lower = n - n_upper;
  Dataset data;
  data.points.resize(static_cast<Eigen::Index>(n), 2);
  data.labels.resize(n);
  auto step = [](std::size_t i, std::size_t count) {
    return count > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1)
                     : 0.0;
  };
  std::size_t r = 0;
  for (std::size_t i = 0; i < n_upper; ++i, ++r) {
    const double t = step(i, n_upper);
    data.points(static_cast<Eigen::Index>(r), 0) = std::cos(t);
    data.points(static_cast<Eigen::Index>(r), 1) = std::sin(t);
    data.labels[r] = 0;
  }
  for (std::size_t i = 0; i < n_lower; ++i, ++r) {
    const double t = step(i, n_lower);
    data.points(static_cast<Eigen::Index>(r), 0) = 1.0 - std::cos(t);
    data.points(static_cast<Eigen::Index>(r), 1) = 0.5 - std::sin(t);
    data.labels[r] = 1;
  }
  for (Eigen::Index i = 0; i < data.points.rows(); ++i) {
    data.points(i, 0) += noise * rng.normal();
    data.points(i, 1) += noise * rng.normal();
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());
  Dataset shuffled;
  shuffled.points.resize(data.points.rows(), 2);
  shuffled.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    shuffled.points.row(static_cast<Eigen::Index>(i)) =
        data.points.row(static_cast<Eigen::Index>(order[i]));
    shuffled.labels[i] = data.labels[order[i]];
  }
  return shuffled;
}

Dataset make_gaussian_blobs(std::size_t n, std::size_t centers, double std_dev,
                            std::uint64_t seed) {
  if (n == 0 || centers == 0) throw ValidationError("gaussian_blobs needs samples and centers");
  Rng rng(seed);
  std::vector<std::array<double, 2>> mu(centers);
  for (auto& c : mu) c = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
  Dataset data;
  data.points.resize(static_cast<Eigen::Index>(n), 2);
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % centers;
    data.points(static_cast<Eigen::Index>(i), 0) = mu[c][0] + std_dev * rng.normal();
    data.points(static_cast<Eigen::Index>(i), 1) = mu[c][1] + std_dev * rng.normal();
    data.labels[i] = static_cast<int>(c);
  }
  return data;
}

Dataset make_dataset(const SyntheticSpec& spec) {
  return spec.kind == DatasetKind::two_moons
             ? make_two_moons(spec.size, spec.noise, spec.seed)
             : make_gaussian_blobs(spec.size, spec.centers, spec.noise, spec.seed);
}

std::size_t class_count(const SyntheticSpec& spec) {
  return spec.kind == DatasetKind::two_moons ? 2 : spec.centers;
}

// ---- model -----------------------------------------------------------------------

namespace {

struct ForwardCache {
  std::vector<Eigen::VectorXd> inputs;  // input to each hidden layer
  std::vector<Eigen::VectorXd> pre;
  Eigen::VectorXd last;                 // input to the head
  Eigen::VectorXd scores;
};

ForwardCache run(const Classifier& model, const Eigen::VectorXd& x) {
  ForwardCache c;
  Eigen::VectorXd a = x;
  for (const auto& layer : model.hidden) {
    c.inputs.push_back(a);
    Eigen::VectorXd z = layer.weights * a + layer.bias;
    a = z.cwiseMax(0.0);
    c.pre.push_back(std::move(z));
  }
  c.scores = model.head.weights * a + model.head.bias;
  c.last = std::move(a);
  return c;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& s) {
  const Eigen::VectorXd e = (s.array() - s.maxCoeff()).exp();
  return e / e.sum();
}

double loss_from_scores(const Eigen::VectorXd& scores, int label, Loss loss) {
  if (loss == Loss::softmax_cross_entropy) {
    const double mx = scores.maxCoeff();
    return std::log((scores.array() - mx).exp().sum()) + mx - scores[label];
  }
  Eigen::VectorXd diff = scores;
  diff[label] -= 1.0;
  return 0.5 * diff.squaredNorm();
}

void check_label(const Classifier& model, int label) {
  if (label < 0 || label >= model.head.weights.rows()) {
    throw ValidationError("label " + std::to_string(label) + " outside [0, " +
                          std::to_string(model.head.weights.rows()) + ")");
  }
}

AffineLayer xavier_layer(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  AffineLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
  for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
      layer.weights(i, j) = rng.uniform(-limit, limit);
    }
  }
  return layer;
}

AffineLayer zero_layer_like(const AffineLayer& l) {
  return {Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
          Eigen::VectorXd::Zero(l.bias.size())};
}

// Flat view over all parameters, for gradient checking.
double& parameter(std::vector<AffineLayer*>& layers, std::size_t index) {
  for (auto* l : layers) {
    const auto nw = static_cast<std::size_t>(l->weights.size());
    if (index < nw) return l->weights.data()[index];
    index -= nw;
    if (index < static_cast<std::size_t>(l->bias.size())) return l->bias[static_cast<Eigen::Index>(index)];
    index -= static_cast<std::size_t>(l->bias.size());
  }
  throw PreconditionError("parameter index out of range");
}

std::vector<AffineLayer*> layers_of(Classifier& m) {
  std::vector<AffineLayer*> out;
  for (auto& l : m.hidden) out.push_back(&l);
  out.push_back(&m.head);
  return out;
}

std::vector<AffineLayer*> layers_of(Gradients& g) {
  std::vector<AffineLayer*> out;
  for (auto& l : g.hidden) out.push_back(&l);
  out.push_back(&g.head);
  return out;
}

}  // namespace

Eigen::VectorXd Classifier::scores(const Eigen::VectorXd& x) const { return run(*this, x).scores; }

int Classifier::predict(const Eigen::VectorXd& x) const {
  Eigen::Index best = 0;
  scores(x).maxCoeff(&best);
  return static_cast<int>(best);
}

std::size_t Classifier::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(head.weights.size() + head.bias.size());
  for (const auto& l : hidden) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

Classifier init_classifier(std::size_t input_dim, const std::vector<std::size_t>& widths,
                           std::size_t classes, Rng& rng) {
  Classifier model;
  model.input_dim = input_dim;
  std::size_t fan_in = input_dim;
  for (const auto w : widths) {
    model.hidden.push_back(xavier_layer(fan_in, w, rng));
    fan_in = w;
  }
  model.head = xavier_layer(fan_in, classes, rng);
  return model;
}

Gradients Gradients::zeros_like(const Classifier& model) {
  Gradients g;
  for (const auto& l : model.hidden) g.hidden.push_back(zero_layer_like(l));
  g.head = zero_layer_like(model.head);
  return g;
}

double sample_loss(const Classifier& model, const Eigen::VectorXd& x, int label, Loss loss) {
  check_label(model, label);
  return loss_from_scores(run(model, x).scores, label, loss);
}

double accumulate_gradients(const Classifier& model, const Eigen::VectorXd& x, int label,
                            Loss loss, Gradients& grad) {
  check_label(model, label);
  const ForwardCache c = run(model, x);
  Eigen::VectorXd d_scores;
  if (loss == Loss::softmax_cross_entropy) {
    d_scores = softmax(c.scores);
  } else {
    d_scores = c.scores;
  }
  d_scores[label] -= 1.0;

  grad.head.weights.noalias() += d_scores * c.last.transpose();
  grad.head.bias += d_scores;
  Eigen::VectorXd d_act = model.head.weights.transpose() * d_scores;
  for (std::size_t k = model.hidden.size(); k-- > 0;) {
    const Eigen::VectorXd d_pre = (c.pre[k].array() > 0.0).select(d_act, 0.0);
    grad.hidden[k].weights.noalias() += d_pre * c.inputs[k].transpose();
    grad.hidden[k].bias += d_pre;
    if (k > 0) d_act = model.hidden[k].weights.transpose() * d_pre;
  }
  return loss_from_scores(c.scores, label, loss);
}

double gradient_check(const Classifier& model, const Eigen::VectorXd& x, int label, double h,
                      Loss loss, std::size_t sample_count, std::uint64_t seed) {
  if (!(h > 0.0)) {
    throw PreconditionError("gradient_check step h must be positive");
  }
  Gradients analytic = Gradients::zeros_like(model);
  accumulate_gradients(model, x, label, loss, analytic);

  const std::size_t total = model.parameter_count();
  std::vector<std::size_t> indices(total);
  std::iota(indices.begin(), indices.end(), 0);
  Rng rng(seed);
  rng.shuffle(indices.begin(), indices.end());
  indices.resize(std::min(total, sample_count));

  Classifier probe = model;
  auto probe_layers = layers_of(probe);
  auto grad_layers = layers_of(analytic);
  double worst = 0.0;
  for (const auto idx : indices) {
    double& p = parameter(probe_layers, idx);
    const double saved = p;
    p = saved + h;
    const double up = sample_loss(probe, x, label, loss);
    p = saved - h;
    const double down = sample_loss(probe, x, label, loss);
    p = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double exact = parameter(grad_layers, idx);
    const double scale = std::max(std::abs(numeric), std::abs(exact));
    const double err = scale < 1e-8 ? std::abs(numeric - exact) : std::abs(numeric - exact) / scale;
    worst = std::max(worst, err);
  }
  return worst;
}

double min_abs_preactivation(const Classifier& model, const Eigen::VectorXd& x) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& z : run(model, x).pre) m = std::min(m, z.cwiseAbs().minCoeff());
  return m;
}

std::vector<int> predict_all(const ReluNetwork& hidden, const AffineLayer& head,
                             const Dataset& data) {
  if (head.cols() != hidden.layers().back().rows()) {
    throw ValidationError("head expects " + std::to_string(head.cols()) +
                          " inputs but the last hidden layer has " +
                          std::to_string(hidden.layers().back().rows()) + " neurons");
  }
  Classifier model{hidden.input_dim(), hidden.layers(), head};
  std::vector<int> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = model.predict(data.points.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return out;
}

// ---- config -------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be positive");
  }
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
  if (architecture.empty()) throw ValidationError("architecture needs at least one hidden layer");
  for (const auto w : architecture) {
    if (w == 0) throw ValidationError("architecture widths must be positive");
  }
  if (dataset.size < 2) throw ValidationError("dataset size must be at least 2");
  if (dataset.noise < 0.0) throw ValidationError("dataset noise must be non-negative");
  if (dataset.kind == DatasetKind::gaussian_blobs && dataset.centers < 2) {
    throw ValidationError("gaussian_blobs needs at least 2 centers");
  }
}

TrainConfig TrainConfig::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("train config: ") + e.what(), e.byte);
  }
  TrainConfig cfg;
  try {
    if (doc.contains("architecture")) cfg.architecture = doc["architecture"].get<std::vector<std::size_t>>();
    if (doc.contains("learning_rate")) cfg.learning_rate = doc["learning_rate"].get<double>();
    if (doc.contains("epochs")) cfg.epochs = doc["epochs"].get<int>();
    if (doc.contains("batch_size")) cfg.batch_size = doc["batch_size"].get<std::size_t>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("checkpoint_dir")) cfg.checkpoint_dir = doc["checkpoint_dir"].get<std::string>();
    if (doc.contains("dataset")) {
      const auto& d = doc["dataset"];
      if (d.contains("kind")) {
        const auto kind = d["kind"].get<std::string>();
        if (kind == "two_moons") {
          cfg.dataset.kind = DatasetKind::two_moons;
        } else if (kind == "gaussian_blobs") {
          cfg.dataset.kind = DatasetKind::gaussian_blobs;
        } else {
          throw ValidationError("unknown dataset kind '" + kind + "'");
        }
      }
      if (d.contains("size")) cfg.dataset.size = d["size"].get<std::size_t>();
      if (d.contains("noise")) cfg.dataset.noise = d["noise"].get<double>();
      if (d.contains("seed")) cfg.dataset.seed = d["seed"].get<std::uint64_t>();
      if (d.contains("centers")) cfg.dataset.centers = d["centers"].get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string TrainConfig::to_json() const {
  nlohmann::json doc;
  doc["architecture"] = architecture;
  doc["dataset"] = {{"kind", dataset.kind == DatasetKind::two_moons ? "two_moons" : "gaussian_blobs"},
                    {"size", dataset.size},
                    {"noise", dataset.noise},
                    {"seed", dataset.seed},
                    {"centers", dataset.centers}};
  doc["learning_rate"] = learning_rate;
  doc["epochs"] = epochs;
  doc["batch_size"] = batch_size;
  doc["seed"] = seed;
  doc["checkpoint_dir"] = checkpoint_dir.string();
  return doc.dump(1) + "\n";
}

// ---- training ---------------------------------------------------------------------

std::filesystem::path head_path(const std::filesystem::path& checkpoint) {
  return std::filesystem::path(checkpoint.string() + ".head");
}

void save_head(const AffineLayer& head, const std::filesystem::path& path) {
  save_network(ReluNetwork(head.cols(), {head}), path, WeightFormat::binary);
}

AffineLayer load_head(const std::filesystem::path& path) {
  const ReluNetwork net = load_network(path);
  if (net.depth() != 1) {
    throw ValidationError(path.string() + ": head file must hold exactly one layer");
  }
  return net.layer(0);
}

TrainResult train(const TrainConfig& config) {
  config.validate();
  const Dataset data = make_dataset(config.dataset);
  Rng rng(config.seed);
  TrainResult result;
  result.model = init_classifier(data.dim(), config.architecture, class_count(config.dataset), rng);
  Classifier& model = result.model;

  std::filesystem::create_directories(config.checkpoint_dir);
  std::string metrics = "epoch,train_loss,train_accuracy\n";
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Gradients grad = Gradients::zeros_like(model);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      for (auto& l : grad.hidden) {
        l.weights.setZero();
        l.bias.setZero();
      }
      grad.head.weights.setZero();
      grad.head.bias.setZero();
      for (std::size_t i = start; i < end; ++i) {
        const auto r = static_cast<Eigen::Index>(order[i]);
        accumulate_gradients(model, data.points.row(r).transpose(), data.labels[order[i]],
                             Loss::softmax_cross_entropy, grad);
      }
      const double step = config.learning_rate / static_cast<double>(end - start);
      for (std::size_t k = 0; k < model.hidden.size(); ++k) {
        model.hidden[k].weights -= step * grad.hidden[k].weights;
        model.hidden[k].bias -= step * grad.hidden[k].bias;
      }
      model.head.weights -= step * grad.head.weights;
      model.head.bias -= step * grad.head.bias;
    }

    double total_loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Eigen::VectorXd x = data.points.row(static_cast<Eigen::Index>(i)).transpose();
      const ForwardCache c = run(model, x);
      total_loss += loss_from_scores(c.scores, data.labels[i], Loss::softmax_cross_entropy);
      Eigen::Index best = 0;
      c.scores.maxCoeff(&best);
      if (best == data.labels[i]) ++correct;
    }
    const double mean_loss = total_loss / static_cast<double>(data.size());
    if (!std::isfinite(mean_loss)) {
      throw TrainingDivergedError("training diverged at epoch " + std::to_string(epoch) +
                                      " (loss is not finite)",
                                  epoch);
    }
    const double accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    result.metrics.push_back({epoch, mean_loss, accuracy});

    char name[32];
    std::snprintf(name, sizeof name, "epoch_%04d.rcw", epoch);
    const auto path = config.checkpoint_dir / name;
    save_network(model.hidden_network(), path, WeightFormat::binary);
    save_head(model.head, head_path(path));
    result.checkpoints.push_back(path);

    char row[96];
    std::snprintf(row, sizeof row, "%d,%.17g,%.17g\n", epoch, mean_loss, accuracy);
    metrics += row;
    write_file(config.checkpoint_dir / "metrics.csv", metrics);
  }
  return result;
}

}  // namespace relucode
