// SPDX-License-Identifier: Apache-2.0
#include "favf/nnet.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "favf/error.hpp"
#include "favf/rng.hpp"

namespace favf::nnet {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-layer activations for one sequence, kept for backpropagation.
struct LayerTrace {
  Eigen::MatrixXd x;      // steps x in
  Eigen::MatrixXd gates;  // steps x 4H, post-activation (i, f, o, g)
  Eigen::MatrixXd c;      // (steps + 1) x H, row 0 is the initial state
  Eigen::MatrixXd h;      // (steps + 1) x H
  Eigen::MatrixXd tanh_c; // steps x H
};

double run_forward(const LstmParams& p, const Eigen::MatrixXd& seq, std::vector<LayerTrace>* traces) {
  const int H = p.hidden();
  const auto steps = seq.rows();
  Eigen::MatrixXd input = seq;
  Eigen::VectorXd z(4 * H);
  for (int l = 0; l < p.layers(); ++l) {
    const auto W = p.W(l);
    const auto U = p.U(l);
    const auto b = p.b(l);
    LayerTrace tr;
    tr.gates.resize(steps, 4 * H);
    tr.c = Eigen::MatrixXd::Zero(steps + 1, H);
    tr.h = Eigen::MatrixXd::Zero(steps + 1, H);
    tr.tanh_c.resize(steps, H);
    for (Eigen::Index s = 0; s < steps; ++s) {
      z.noalias() = W * input.row(s).transpose();
      z.noalias() += U * tr.h.row(s).transpose();
      z += b;
      for (int j = 0; j < 3 * H; ++j) z(j) = sigmoid(z(j));
      for (int j = 3 * H; j < 4 * H; ++j) z(j) = std::tanh(z(j));
      tr.gates.row(s) = z.transpose();
      for (int j = 0; j < H; ++j) {
        const double c = z(H + j) * tr.c(s, j) + z(j) * z(3 * H + j);
        tr.c(s + 1, j) = c;
        tr.tanh_c(s, j) = std::tanh(c);
        tr.h(s + 1, j) = z(2 * H + j) * tr.tanh_c(s, j);
      }
    }
    Eigen::MatrixXd next = tr.h.bottomRows(steps);
    if (traces) {
      tr.x = std::move(input);
      traces->push_back(std::move(tr));
    }
    input = std::move(next);
  }
  return p.dense_w().dot(input.row(steps - 1)) + p.dense_b();
}

void check_shape(const LstmParams& p, const Eigen::MatrixXd& seq) {
  if (seq.rows() < 1 || seq.cols() != p.input_width()) {
    throw Error("sequence shape " + std::to_string(seq.rows()) + "x" + std::to_string(seq.cols()) +
                " does not match input width " + std::to_string(p.input_width()));
  }
}

}  // namespace

void LstmConfig::validate() const {
  if (layers != 3) throw ConfigError("LSTM must have 3 layers");
  if (window != 7) throw ConfigError("LSTM window must be 7");
  if (hidden < 1 || input_width < 1) throw ConfigError("LSTM sizes must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("LSTM learning rate must be positive");
  if (epochs < 0 || batch_size < 1 || patience < 1) throw ConfigError("invalid LSTM training schedule");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must lie in (0, 1)");
  }
  if (!seed_set) throw ConfigError("LSTM seed is mandatory");
}

LstmParams::LstmParams(int layers, int hidden, int input_width)
    : layers_(layers), hidden_(hidden), input_width_(input_width) {
  values_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset_dense() + static_cast<std::size_t>(hidden) + 1));
}

std::size_t LstmParams::offset_W(int l) const {
  std::size_t off = 0;
  for (int i = 0; i < l; ++i) {
    const auto H4 = static_cast<std::size_t>(4 * hidden_);
    off += H4 * static_cast<std::size_t>(layer_input(i)) + H4 * static_cast<std::size_t>(hidden_) + H4;
  }
  return off;
}
std::size_t LstmParams::offset_U(int l) const {
  return offset_W(l) + static_cast<std::size_t>(4 * hidden_) * static_cast<std::size_t>(layer_input(l));
}
std::size_t LstmParams::offset_b(int l) const {
  return offset_U(l) + static_cast<std::size_t>(4 * hidden_) * static_cast<std::size_t>(hidden_);
}
std::size_t LstmParams::offset_dense() const { return offset_W(layers_); }

Eigen::Map<Eigen::MatrixXd> LstmParams::W(int l) {
  return {values_.data() + offset_W(l), 4 * hidden_, layer_input(l)};
}
Eigen::Map<Eigen::MatrixXd> LstmParams::U(int l) { return {values_.data() + offset_U(l), 4 * hidden_, hidden_}; }
Eigen::Map<Eigen::VectorXd> LstmParams::b(int l) { return {values_.data() + offset_b(l), 4 * hidden_}; }
Eigen::Map<Eigen::VectorXd> LstmParams::dense_w() { return {values_.data() + offset_dense(), hidden_}; }
double& LstmParams::dense_b() { return values_(static_cast<Eigen::Index>(offset_dense()) + hidden_); }
Eigen::Map<const Eigen::MatrixXd> LstmParams::W(int l) const {
  return {values_.data() + offset_W(l), 4 * hidden_, layer_input(l)};
}
Eigen::Map<const Eigen::MatrixXd> LstmParams::U(int l) const {
  return {values_.data() + offset_U(l), 4 * hidden_, hidden_};
}
Eigen::Map<const Eigen::VectorXd> LstmParams::b(int l) const { return {values_.data() + offset_b(l), 4 * hidden_}; }
Eigen::Map<const Eigen::VectorXd> LstmParams::dense_w() const { return {values_.data() + offset_dense(), hidden_}; }
double LstmParams::dense_b() const { return values_(static_cast<Eigen::Index>(offset_dense()) + hidden_); }

LstmParams LstmParams::initialize(const LstmConfig& config) {
  config.validate();
  LstmParams p(config.layers, config.hidden, config.input_width);
  Rng rng(config.seed);
  const int H = config.hidden;
  for (int l = 0; l < p.layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.layer_input(l) + H));
    for (auto& v : p.W(l).reshaped()) v = rng.uniform(-bound, bound);
    for (auto& v : p.U(l).reshaped()) v = rng.uniform(-bound, bound);
    for (auto& v : p.b(l)) v = rng.uniform(-bound, bound);
    p.b(l).segment(H, H).setOnes();
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(H));
  for (auto& v : p.dense_w()) v = rng.uniform(-bound, bound);
  p.dense_b() = 0.0;
  return p;
}

double forward(const LstmParams& params, const Eigen::MatrixXd& sequence) {
  check_shape(params, sequence);
  const double y = run_forward(params, sequence, nullptr);
  if (!std::isfinite(y)) throw Error("non-finite LSTM output");
  return y;
}

double accumulate_gradient(const LstmParams& params, const Eigen::MatrixXd& sequence, double target, double scale,
                           Eigen::VectorXd& grad) {
  check_shape(params, sequence);
  if (grad.size() != static_cast<Eigen::Index>(params.size())) throw Error("gradient buffer has the wrong size");
  std::vector<LayerTrace> traces;
  traces.reserve(static_cast<std::size_t>(params.layers()));
  const double pred = run_forward(params, sequence, &traces);
  const double dpred = 2.0 * scale * (pred - target);
  const int H = params.hidden();
  const auto steps = sequence.rows();

  // Dense head.
  const auto dense = static_cast<Eigen::Index>(params.offset_dense());
  const auto& top = traces.back();
  grad.segment(dense, H) += dpred * top.h.row(steps).transpose();
  grad(dense + H) += dpred;

  // dh arriving from above for every step of the current layer.
  Eigen::MatrixXd dh_above = Eigen::MatrixXd::Zero(steps, H);
  dh_above.row(steps - 1) = dpred * params.dense_w().transpose();

  Eigen::VectorXd dz(4 * H);
  for (int l = params.layers() - 1; l >= 0; --l) {
    const auto& tr = traces[static_cast<std::size_t>(l)];
    const auto W = params.W(l);
    const auto U = params.U(l);
    const int in = params.layer_input(l);
    Eigen::Map<Eigen::MatrixXd> dW(grad.data() + params.offset_W(l), 4 * H, in);
    Eigen::Map<Eigen::MatrixXd> dU(grad.data() + params.offset_U(l), 4 * H, H);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + params.offset_b(l), 4 * H);
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(steps, in);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(H);
    for (Eigen::Index s = steps - 1; s >= 0; --s) {
      for (int j = 0; j < H; ++j) {
        const double i = tr.gates(s, j);
        const double f = tr.gates(s, H + j);
        const double o = tr.gates(s, 2 * H + j);
        const double g = tr.gates(s, 3 * H + j);
        const double tc = tr.tanh_c(s, j);
        const double dh = dh_above(s, j) + dh_next(j);
        const double dc = dh * o * (1.0 - tc * tc) + dc_next(j);
        dz(j) = dc * g * i * (1.0 - i);
        dz(H + j) = dc * tr.c(s, j) * f * (1.0 - f);
        dz(2 * H + j) = dh * tc * o * (1.0 - o);
        dz(3 * H + j) = dc * i * (1.0 - g * g);
        dc_next(j) = dc * f;
      }
      dW.noalias() += dz * tr.x.row(s);
      dU.noalias() += dz * tr.h.row(s);
      db += dz;
      dx.row(s).noalias() = (W.transpose() * dz).transpose();
      dh_next.noalias() = U.transpose() * dz;
    }
    dh_above = std::move(dx);
  }
  return pred;
}

double gradient_check(const LstmParams& params, const Eigen::MatrixXd& sequence, double target, std::uint64_t seed,
                      std::size_t count, double step, double floor) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  accumulate_gradient(params, sequence, target, 1.0, grad);

  std::vector<std::size_t> idx(params.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  const std::size_t take = std::min(count, idx.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (idx.size() - i));
    std::swap(idx[i], idx[j]);
  }

  LstmParams probe = params;
  const auto loss = [&] {
    const double e = run_forward(probe, sequence, nullptr) - target;
    return e * e;
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < take; ++i) {
    const auto k = static_cast<Eigen::Index>(idx[i]);
    const double orig = probe.values()(k);
    probe.values()(k) = orig + step;
    const double up = loss();
    probe.values()(k) = orig - step;
    const double down = loss();
    probe.values()(k) = orig;
    const double numeric = (up - down) / (2.0 * step);
    const double analytic = grad(k);
    const double scale = std::max(std::abs(analytic) + std::abs(numeric), floor);
    const double rel = scale > 0.0 ? std::abs(analytic - numeric) / scale : 0.0;
    worst = std::max(worst, rel);
  }
  return worst;
}

Standardizer Standardizer::fit(std::span<const Eigen::MatrixXd> inputs, std::span<const double> targets) {
  if (inputs.empty() || inputs.size() != targets.size()) throw Error("standardizer needs aligned, non-empty data");
  const auto width = inputs.front().cols();
  Standardizer s;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(width);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(width);
  double n = 0.0;
  for (const auto& x : inputs) {
    sum += x.colwise().sum().transpose();
    n += static_cast<double>(x.rows());
  }
  s.mean = sum / n;
  for (const auto& x : inputs) sq += (x.rowwise() - s.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  s.scale = (sq / n).cwiseSqrt();
  for (auto& v : s.scale)
    if (!(v > 0.0)) v = 1.0;
  double ty = 0.0;
  for (double y : targets) ty += y;
  s.target_mean = ty / static_cast<double>(targets.size());
  double vy = 0.0;
  for (double y : targets) vy += (y - s.target_mean) * (y - s.target_mean);
  s.target_scale = std::sqrt(vy / static_cast<double>(targets.size()));
  if (!(s.target_scale > 0.0)) s.target_scale = 1.0;
  return s;
}

Eigen::MatrixXd Standardizer::standardize(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::MatrixXd Standardizer::destandardize(const Eigen::MatrixXd& z) const {
  return (z.array().rowwise() * scale.transpose().array()).matrix().rowwise() + mean.transpose();
}

double TrainedModel::predict(const Eigen::MatrixXd& raw_sequence) const {
  return standardizer.destandardize_target(forward(params, standardizer.standardize(raw_sequence)));
}

TrainedModel train(const LstmConfig& config, const Dataset& data) {
  config.validate();
  if (data.size() < 100) throw Error("LSTM training needs at least 100 sequences, got " + std::to_string(data.size()));
  for (const auto& x : data.inputs) {
    if (x.rows() != config.window || x.cols() != config.input_width) throw Error("training sequence shape mismatch");
  }
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(config.validation_fraction *
                                                                                  static_cast<double>(data.size()))));
  const std::size_t n_fit = data.size() - n_val;

  TrainedModel model;
  model.standardizer = Standardizer::fit(std::span(data.inputs).first(n_fit), std::span(data.targets).first(n_fit));
  std::vector<Eigen::MatrixXd> xs;
  std::vector<double> ys;
  xs.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    xs.push_back(model.standardizer.standardize(data.inputs[i]));
    ys.push_back(model.standardizer.standardize_target(data.targets[i]));
  }

  LstmParams params = LstmParams::initialize(config);
  model.params = params;
  Rng rng(config.seed ^ 0x5DEECE66DULL);
  const auto P = static_cast<Eigen::Index>(params.size());
  Eigen::VectorXd m = Eigen::VectorXd::Zero(P);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(P);
  Eigen::VectorXd grad(P);
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  long step = 0;

  const auto validation_mse = [&](const LstmParams& p) {
    double s = 0.0;
    for (std::size_t i = n_fit; i < data.size(); ++i) {
      const double e = run_forward(p, xs[i], nullptr) - ys[i];
      s += e * e;
    }
    return s / static_cast<double>(n_val);
  };

  double best = validation_mse(params);
  int since_best = 0;
  std::vector<std::size_t> order(n_fit);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.next_u64() % i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n_fit; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(n_fit, start + static_cast<std::size_t>(config.batch_size));
      const double scale = 1.0 / static_cast<double>(end - start);
      grad.setZero();
      for (std::size_t b = start; b < end; ++b) {
        const double pred = accumulate_gradient(params, xs[order[b]], ys[order[b]], scale, grad);
        epoch_loss += (pred - ys[order[b]]) * (pred - ys[order[b]]);
      }
      ++step;
      m = beta1 * m + (1.0 - beta1) * grad;
      v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      params.values().array() -=
          config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
    epoch_loss /= static_cast<double>(n_fit);
    if (!std::isfinite(epoch_loss)) throw Error("diverged at epoch " + std::to_string(epoch));
    const double val = validation_mse(params);
    model.history.train_loss.push_back(epoch_loss);
    model.history.validation_loss.push_back(val);
    if (val < best) {
      best = val;
      since_best = 0;
      model.params = params;
      model.history.best_epoch = epoch;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return model;
}

std::pair<Dataset, Dataset> split_80_20(const Dataset& all, int horizon) {
  const auto n_train = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(all.size())));
  if (n_train == 0 || n_train >= all.size()) throw Error("dataset too small for an 80:20 split");
  Dataset train, test;
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto& dst = i < n_train ? train : test;
    // A training target averages rows i+1..i+h; keep it clear of the test rows.
    if (i < n_train && i + static_cast<std::size_t>(horizon) > n_train) continue;
    dst.inputs.push_back(all.inputs[i]);
    dst.targets.push_back(all.targets[i]);
    dst.origins.push_back(all.origins[i]);
  }
  return {std::move(train), std::move(test)};
}

Dataset make_dataset(const ingest::VolPanel& panel, std::size_t asset, const factors::FactorPath* path, int S,
                     int horizon, int window) {
  if (window < 1) throw Error("window must be >= 1");
  if (S > 0 && (!path || S > path->k)) throw Error("LSTM: requested factors exceed available factors");
  const auto rv = panel.column(asset);
  const auto target = models::horizon_target(rv.rv, horizon);
  const auto w = static_cast<std::size_t>(window);
  std::size_t first = w - 1;
  if (S > 0) first = std::max(first, path->first_row + w - 1);
  Dataset d;
  const auto hs = static_cast<std::size_t>(horizon);
  if (panel.rows() <= hs) return d;
  for (std::size_t t = first; t + hs < panel.rows(); ++t) {
    Eigen::MatrixXd x(window, 1 + S);
    for (std::size_t s = 0; s < w; ++s) {
      const std::size_t row = t + 1 - w + s;
      const auto si = static_cast<Eigen::Index>(s);
      x(si, 0) = rv.rv[row];
      for (int j = 0; j < S; ++j) x(si, 1 + j) = path->factor_at_row(row, j);
    }
    d.inputs.push_back(std::move(x));
    d.targets.push_back(target[t]);
    d.origins.push_back(panel.dates[t]);
  }
  return d;
}

namespace {

int lstm_factor_count(const ingest::VolPanel& panel, const models::FactorConfig& factors,
                      const factors::FactorPath& path, int horizon) {
  // Fix S from information available before the test split.
  const std::size_t rows = panel.rows() - static_cast<std::size_t>(horizon);
  const std::size_t split_row = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(rows)));
  return models::factor_count(path, factors, std::max(split_row, path.first_row));
}

}  // namespace

models::ForecastSeries lstm_forecast(const ingest::VolPanel& panel, std::size_t asset,
                                     const models::FactorConfig& factors, int horizon, const TrainedModel& model,
                                     const factors::FactorPath* path) {
  const int S = model.params.input_width() - 1;
  factors::FactorPath own;
  if (S > 0 && !path) {
    own = factors::extract_factors(panel, factors.window, static_cast<int>(panel.cols()));
    path = &own;
  }
  const auto all = make_dataset(panel, asset, path, S, horizon, 7);
  const auto [train_set, test_set] = split_80_20(all, horizon);
  models::ForecastSeries out;
  out.model = models::model_id(models::ModelKind::lstm, S > 0);
  out.asset = panel.assets[asset];
  out.horizon = horizon;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    out.records.push_back({test_set.origins[i], test_set.targets[i], model.predict(test_set.inputs[i])});
  }
  return out;
}

models::ForecastSeries lstm_run(const ingest::VolPanel& panel, std::size_t asset, const models::FactorConfig& factors,
                                int horizon, const LstmConfig& base, const factors::FactorPath* path,
                                TrainedModel* trained) {
  factors::FactorPath own;
  int S = 0;
  if (factors.augment) {
    if (!path) {
      own = factors::extract_factors(panel, factors.window, static_cast<int>(panel.cols()));
      path = &own;
    }
    S = lstm_factor_count(panel, factors, *path, horizon);
  }
  LstmConfig config = base;
  config.input_width = 1 + S;
  const auto all = make_dataset(panel, asset, path, S, horizon, config.window);
  const auto [train_set, test_set] = split_80_20(all, horizon);
  auto model = train(config, train_set);
  auto out = lstm_forecast(panel, asset, factors, horizon, model, path);
  if (trained) *trained = std::move(model);
  return out;
}

void save_model(const std::filesystem::path& path, const TrainedModel& model, const LstmConfig& config) {
  nlohmann::json header;
  header["format"] = "favf-lstm";
  header["version"] = 1;
  header["layers"] = model.params.layers();
  header["hidden"] = model.params.hidden();
  header["input_width"] = model.params.input_width();
  header["window"] = config.window;
  header["count"] = model.params.size();
  header["seed"] = config.seed;
  header["standardizer"] = {
      {"mean", std::vector<double>(model.standardizer.mean.begin(), model.standardizer.mean.end())},
      {"scale", std::vector<double>(model.standardizer.scale.begin(), model.standardizer.scale.end())},
      {"target_mean", model.standardizer.target_mean},
      {"target_scale", model.standardizer.target_scale}};
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  static_assert(std::endian::native == std::endian::little, "parameter files are little-endian");
  out.write("FAVFLSTM", 8);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(model.params.values().data()),
            static_cast<std::streamsize>(model.params.size() * sizeof(double)));
  if (!out) throw Error("failed writing " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path, LstmConfig* config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "FAVFLSTM", 8) != 0) throw Error(path.string() + ": not an LSTM parameter file");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || len > (1u << 24)) throw Error(path.string() + ": corrupt header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  const auto header = nlohmann::json::parse(text);

  TrainedModel model;
  model.params = LstmParams(header.at("layers").get<int>(), header.at("hidden").get<int>(),
                            header.at("input_width").get<int>());
  if (header.at("count").get<std::size_t>() != model.params.size()) throw Error(path.string() + ": shape mismatch");
  in.read(reinterpret_cast<char*>(model.params.values().data()),
          static_cast<std::streamsize>(model.params.size() * sizeof(double)));
  if (!in) throw Error(path.string() + ": truncated parameter block");
  const auto& st = header.at("standardizer");
  const auto mean = st.at("mean").get<std::vector<double>>();
  const auto scale = st.at("scale").get<std::vector<double>>();
  model.standardizer.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  model.standardizer.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  model.standardizer.target_mean = st.at("target_mean").get<double>();
  model.standardizer.target_scale = st.at("target_scale").get<double>();
  if (config) {
    config->layers = model.params.layers();
    config->hidden = model.params.hidden();
    config->input_width = model.params.input_width();
    config->window = header.at("window").get<int>();
    config->with_seed(header.at("seed").get<std::uint64_t>());
  }
  return model;
}

}  // namespace favf::nnet
