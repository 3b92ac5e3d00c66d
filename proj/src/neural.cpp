#include "trendrul/neural.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <string>

#include "trendrul/errors.hpp"
#include "trendrul/io.hpp"

namespace trendrul::neural {

namespace {

using Array = Eigen::ArrayXXd;

Matrix sigmoid(const Matrix& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

// Fixed traversal order of every parameter tensor; shared by init, Adam and
// checkpoint IO.
struct TensorRef {
  const char* name;
  double* data;
  std::size_t size;
};

std::vector<TensorRef> tensor_refs(NetworkParameters& p) {
  const auto M = [](const char* name, Matrix& m) {
    return TensorRef{name, m.data(), static_cast<std::size_t>(m.size())};
  };
  const auto V = [](const char* name, Vector& v) {
    return TensorRef{name, v.data(), static_cast<std::size_t>(v.size())};
  };
  LstmLayerParams& l1 = p.layer1;
  LstmLayerParams& l2 = p.layer2;
  return {
      M("layer1.Wf", l1.Wf), M("layer1.Wi", l1.Wi), M("layer1.Wc", l1.Wc),
      M("layer1.Wo", l1.Wo), M("layer1.Rf", l1.Rf), M("layer1.Ri", l1.Ri),
      M("layer1.Rc", l1.Rc), M("layer1.Ro", l1.Ro), V("layer1.bf", l1.bf),
      V("layer1.bi", l1.bi), V("layer1.bc", l1.bc), V("layer1.bo", l1.bo),
      M("layer2.Wf", l2.Wf), M("layer2.Wi", l2.Wi), M("layer2.Wc", l2.Wc),
      M("layer2.Wo", l2.Wo), M("layer2.Rf", l2.Rf), M("layer2.Ri", l2.Ri),
      M("layer2.Rc", l2.Rc), M("layer2.Ro", l2.Ro), V("layer2.bf", l2.bf),
      V("layer2.bi", l2.bi), V("layer2.bc", l2.bc), V("layer2.bo", l2.bo),
      V("head.w", p.head.w),
      TensorRef{"head.b", &p.head.b, 1},
  };
}

LstmLayerParams make_layer(int input, int hidden) {
  LstmLayerParams l;
  l.Wf = Matrix::Zero(hidden, input);
  l.Wi = Matrix::Zero(hidden, input);
  l.Wc = Matrix::Zero(hidden, input);
  l.Wo = Matrix::Zero(hidden, input);
  l.Rf = Matrix::Zero(hidden, hidden);
  l.Ri = Matrix::Zero(hidden, hidden);
  l.Rc = Matrix::Zero(hidden, hidden);
  l.Ro = Matrix::Zero(hidden, hidden);
  l.bf = Vector::Zero(hidden);
  l.bi = Vector::Zero(hidden);
  l.bc = Vector::Zero(hidden);
  l.bo = Vector::Zero(hidden);
  return l;
}

NetworkParameters make_parameters(const NetworkConfig& cfg) {
  NetworkParameters p;
  p.layer1 = make_layer(cfg.input_size, cfg.layer_sizes[0]);
  p.layer2 = make_layer(cfg.layer_sizes[0], cfg.layer_sizes[1]);
  p.head.w = Vector::Zero(cfg.layer_sizes[1]);
  p.head.b = 0.0;
  return p;
}

void fill_uniform(double* data, std::size_t size, double bound,
                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (std::size_t i = 0; i < size; ++i) data[i] = dist(rng);
}

void validate_mask_prefix(const std::vector<bool>& mask) {
  bool seen_true = false;
  for (bool m : mask) {
    if (m) {
      seen_true = true;
    } else if (seen_true) {
      throw MaskError("mask=false rows are only allowed as a front prefix");
    }
  }
}

// Scales for inverted dropout: 0 with probability p, 1/(1-p) otherwise.
Matrix dropout_scales(Eigen::Index rows, Eigen::Index cols, double p,
                      std::mt19937_64& rng) {
  Matrix scales(rows, cols);
  std::bernoulli_distribution drop(p);
  const double keep_scale = 1.0 / (1.0 - p);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      scales(r, c) = drop(rng) ? 0.0 : keep_scale;
    }
  }
  return scales;
}

// One layer's masked scan over the whole batch.
LayerCache scan_layer(const std::vector<Matrix>& inputs, const Matrix& mask,
                      const LstmLayerParams& p) {
  const int T = static_cast<int>(inputs.size());
  const Eigen::Index B = inputs.empty() ? 0 : inputs[0].rows();
  const Eigen::Index H = p.Wf.rows();

  LayerCache cache;
  cache.x.resize(inputs.size());
  cache.f.resize(inputs.size());
  cache.i.resize(inputs.size());
  cache.c_tilde.resize(inputs.size());
  cache.o.resize(inputs.size());
  cache.c.resize(inputs.size());
  cache.tanh_c.resize(inputs.size());
  cache.h_prev.resize(inputs.size());
  cache.c_prev.resize(inputs.size());
  cache.h.resize(inputs.size());

  Matrix h_state = Matrix::Zero(B, H);
  Matrix c_state = Matrix::Zero(B, H);
  for (int t = 0; t < T; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    const Matrix& x = inputs[ti];
    if (x.cols() != p.Wf.cols()) {
      throw ShapeError("layer input width " + std::to_string(x.cols()) +
                       " does not match weights " +
                       std::to_string(p.Wf.cols()));
    }
    cache.x[ti] = x;
    cache.h_prev[ti] = h_state;
    cache.c_prev[ti] = c_state;

    Matrix zf = x * p.Wf.transpose() + h_state * p.Rf.transpose();
    Matrix zi = x * p.Wi.transpose() + h_state * p.Ri.transpose();
    Matrix zc = x * p.Wc.transpose() + h_state * p.Rc.transpose();
    Matrix zo = x * p.Wo.transpose() + h_state * p.Ro.transpose();
    zf.rowwise() += p.bf.transpose();
    zi.rowwise() += p.bi.transpose();
    zc.rowwise() += p.bc.transpose();
    zo.rowwise() += p.bo.transpose();

    const Matrix f = sigmoid(zf);
    const Matrix i = sigmoid(zi);
    const Matrix c_tilde = zc.array().tanh().matrix();
    const Matrix o = sigmoid(zo);
    const Matrix c_new =
        (f.array() * c_state.array() + i.array() * c_tilde.array()).matrix();
    const Matrix tanh_c = c_new.array().tanh().matrix();
    const Matrix h_new = (o.array() * tanh_c.array()).matrix();

    const auto m = mask.row(t).transpose().array();  // B
    // Masked timesteps leave the state untouched and emit a zero row.
    const Matrix h_next =
        (h_new.array().colwise() * m + h_state.array().colwise() * (1.0 - m))
            .matrix();
    const Matrix c_next =
        (c_new.array().colwise() * m + c_state.array().colwise() * (1.0 - m))
            .matrix();

    cache.f[ti] = f;
    cache.i[ti] = i;
    cache.c_tilde[ti] = c_tilde;
    cache.o[ti] = o;
    cache.c[ti] = c_new;
    cache.tanh_c[ti] = tanh_c;
    cache.h[ti] = (h_new.array().colwise() * m).matrix();

    h_state = h_next;
    c_state = c_next;
  }
  return cache;
}

struct LayerGrads {
  LstmLayerParams g;
  std::vector<Matrix> d_input;  // grad w.r.t. the layer inputs per step
};

// Backward through one layer given per-step output gradients.
LayerGrads backprop_layer(const LayerCache& cache, const Matrix& mask,
                          const std::vector<Matrix>& d_out,
                          const LstmLayerParams& p) {
  const int T = static_cast<int>(cache.x.size());
  const Eigen::Index B = T > 0 ? cache.x[0].rows() : 0;
  const Eigen::Index H = p.Wf.rows();
  const Eigen::Index in = p.Wf.cols();

  LayerGrads out;
  out.g = make_layer(static_cast<int>(in), static_cast<int>(H));
  out.d_input.assign(cache.x.size(), Matrix());

  Matrix dh_state = Matrix::Zero(B, H);
  Matrix dc_state = Matrix::Zero(B, H);
  for (int t = T - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    const auto m = mask.row(t).transpose().array();  // B

    const Matrix dh_total =
        dh_state + (d_out[ti].array().colwise() * m).matrix();
    const Array dh_cell = dh_total.array().colwise() * m;
    const Matrix dh_pass =
        (dh_total.array().colwise() * (1.0 - m)).matrix();
    const Array dc_in = dc_state.array().colwise() * m;
    const Matrix dc_pass =
        (dc_state.array().colwise() * (1.0 - m)).matrix();

    const Array f = cache.f[ti].array();
    const Array i = cache.i[ti].array();
    const Array c_tilde = cache.c_tilde[ti].array();
    const Array o = cache.o[ti].array();
    const Array tanh_c = cache.tanh_c[ti].array();

    const Array d_o = dh_cell * tanh_c;
    const Array dc = dc_in + dh_cell * o * (1.0 - tanh_c * tanh_c);
    const Array df = dc * cache.c_prev[ti].array();
    const Array di = dc * c_tilde;
    const Array dct = dc * i;

    const Matrix dzf = (df * f * (1.0 - f)).matrix();
    const Matrix dzi = (di * i * (1.0 - i)).matrix();
    const Matrix dzc = (dct * (1.0 - c_tilde * c_tilde)).matrix();
    const Matrix dzo = (d_o * o * (1.0 - o)).matrix();

    out.g.Wf += dzf.transpose() * cache.x[ti];
    out.g.Wi += dzi.transpose() * cache.x[ti];
    out.g.Wc += dzc.transpose() * cache.x[ti];
    out.g.Wo += dzo.transpose() * cache.x[ti];
    out.g.Rf += dzf.transpose() * cache.h_prev[ti];
    out.g.Ri += dzi.transpose() * cache.h_prev[ti];
    out.g.Rc += dzc.transpose() * cache.h_prev[ti];
    out.g.Ro += dzo.transpose() * cache.h_prev[ti];
    out.g.bf += dzf.colwise().sum().transpose();
    out.g.bi += dzi.colwise().sum().transpose();
    out.g.bc += dzc.colwise().sum().transpose();
    out.g.bo += dzo.colwise().sum().transpose();

    out.d_input[ti] = dzf * p.Wf + dzi * p.Wi + dzc * p.Wc + dzo * p.Wo;
    dh_state = dzf * p.Rf + dzi * p.Ri + dzc * p.Rc + dzo * p.Ro + dh_pass;
    dc_state = (dc * f).matrix() + dc_pass;
  }
  return out;
}

}  // namespace

Batch make_batch(const std::vector<SequenceExample>& examples) {
  if (examples.empty()) {
    throw ShapeError("make_batch requires at least one sequence");
  }
  const Eigen::Index width = examples[0].features.cols();
  int max_len = 0;
  for (const auto& ex : examples) {
    if (ex.features.cols() != width) {
      throw ShapeError("all sequences in a batch must share feature width");
    }
    if (ex.labels.size() != ex.features.rows() ||
        static_cast<Eigen::Index>(ex.mask.size()) != ex.features.rows()) {
      throw ShapeError("labels and mask must match the sequence length");
    }
    validate_mask_prefix(ex.mask);
    max_len = std::max(max_len, static_cast<int>(ex.features.rows()));
  }

  const auto B = static_cast<Eigen::Index>(examples.size());
  Batch batch;
  batch.inputs.assign(static_cast<std::size_t>(max_len),
                      Matrix::Zero(B, width));
  batch.labels = Matrix::Zero(max_len, B);
  batch.mask = Matrix::Zero(max_len, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& ex = examples[static_cast<std::size_t>(b)];
    const int len = static_cast<int>(ex.features.rows());
    const int pad = max_len - len;
    for (int t = 0; t < len; ++t) {
      if (!ex.mask[static_cast<std::size_t>(t)]) continue;
      batch.inputs[static_cast<std::size_t>(pad + t)].row(b) =
          ex.features.row(t);
      batch.labels(pad + t, b) = ex.labels(t);
      batch.mask(pad + t, b) = 1.0;
    }
  }
  return batch;
}

std::pair<CellState, CellCache> lstm_cell_forward(const Vector& input,
                                                  const CellState& prev,
                                                  const LstmLayerParams& p) {
  if (input.size() != p.Wf.cols() || prev.h.size() != p.Rf.cols() ||
      prev.C.size() != p.Rf.cols()) {
    throw ShapeError("lstm_cell_forward: input/state sizes do not match the "
                     "layer weights");
  }
  CellCache cache;
  cache.x = input;
  cache.h_prev = prev.h;
  cache.C_prev = prev.C;
  const auto gate = [&](const Matrix& W, const Matrix& R, const Vector& b) {
    return (W * input + R * prev.h + b).eval();
  };
  cache.f = sigmoid(gate(p.Wf, p.Rf, p.bf));
  cache.i = sigmoid(gate(p.Wi, p.Ri, p.bi));
  cache.c_tilde = gate(p.Wc, p.Rc, p.bc).array().tanh().matrix();
  cache.o = sigmoid(gate(p.Wo, p.Ro, p.bo));
  cache.C = (cache.f.array() * prev.C.array() +
             cache.i.array() * cache.c_tilde.array())
                .matrix();
  cache.tanh_C = cache.C.array().tanh().matrix();
  CellState next;
  next.C = cache.C;
  next.h = (cache.o.array() * cache.tanh_C.array()).matrix();
  return {next, cache};
}

Matrix lstm_layer_forward(const Matrix& sequence,
                          const std::vector<bool>& mask,
                          const LstmLayerParams& p) {
  if (static_cast<Eigen::Index>(mask.size()) != sequence.rows()) {
    throw ShapeError("mask length must equal the sequence length");
  }
  validate_mask_prefix(mask);
  const int T = static_cast<int>(sequence.rows());
  std::vector<Matrix> inputs(static_cast<std::size_t>(T));
  Matrix mask_mat(T, 1);
  for (int t = 0; t < T; ++t) {
    inputs[static_cast<std::size_t>(t)] = sequence.row(t);
    mask_mat(t, 0) = mask[static_cast<std::size_t>(t)] ? 1.0 : 0.0;
  }
  const LayerCache cache = scan_layer(inputs, mask_mat, p);
  Matrix out(T, p.Wf.rows());
  for (int t = 0; t < T; ++t) {
    out.row(t) = cache.h[static_cast<std::size_t>(t)];
  }
  return out;
}

Matrix dropout(const Matrix& x, double p, bool training,
               std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw InvalidProbability("dropout probability must satisfy 0 <= p < 1");
  }
  if (!training || p == 0.0) return x;
  return x.cwiseProduct(dropout_scales(x.rows(), x.cols(), p, rng));
}

double dense_tanh_head(const Vector& h, const DenseParams& p) {
  if (h.size() != p.w.size()) {
    throw ShapeError("dense head width mismatch");
  }
  return std::tanh(p.w.dot(h) + p.b);
}

double denormalize_rul(double y, int cap) {
  return (y + 1.0) * 0.5 * static_cast<double>(cap);
}

double normalize_rul(double rul, int cap) {
  return 2.0 * rul / static_cast<double>(cap) - 1.0;
}

double mse_loss(const Vector& pred, const Vector& label,
                const std::vector<bool>& mask) {
  if (pred.size() != label.size() ||
      static_cast<Eigen::Index>(mask.size()) != pred.size()) {
    throw ShapeError("mse_loss requires equal-length inputs");
  }
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index t = 0; t < pred.size(); ++t) {
    if (!mask[static_cast<std::size_t>(t)]) continue;
    const double d = pred(t) - label(t);
    sum += d * d;
    ++count;
  }
  if (count == 0) {
    throw EmptyLoss("mse_loss over an all-false mask");
  }
  return sum / count;
}

NetworkParameters init_parameters(const NetworkConfig& cfg,
                                  std::mt19937_64& rng) {
  NetworkParameters p = make_parameters(cfg);
  const auto init_layer = [&rng](LstmLayerParams& l) {
    const double sw = 1.0 / std::sqrt(static_cast<double>(l.Wf.cols()));
    const double sr = 1.0 / std::sqrt(static_cast<double>(l.Rf.cols()));
    for (Matrix* w : {&l.Wf, &l.Wi, &l.Wc, &l.Wo}) {
      fill_uniform(w->data(), static_cast<std::size_t>(w->size()), sw, rng);
    }
    for (Matrix* r : {&l.Rf, &l.Ri, &l.Rc, &l.Ro}) {
      fill_uniform(r->data(), static_cast<std::size_t>(r->size()), sr, rng);
    }
  };
  init_layer(p.layer1);
  init_layer(p.layer2);
  fill_uniform(p.head.w.data(), static_cast<std::size_t>(p.head.w.size()),
               1.0 / std::sqrt(static_cast<double>(p.head.w.size())), rng);
  return p;
}

NetworkParameters zeros_like(const NetworkParameters& p) {
  NetworkParameters z = p;
  for (auto& ref : tensor_refs(z)) {
    std::fill(ref.data, ref.data + ref.size, 0.0);
  }
  return z;
}

ForwardCache forward(const Batch& batch, const TrainState& state,
                     bool training, std::mt19937_64& rng) {
  const NetworkConfig& cfg = state.config;
  if (batch.steps() == 0 || batch.size() == 0) {
    throw ShapeError("forward requires a non-empty batch");
  }
  if (batch.inputs[0].cols() != cfg.input_size) {
    throw ShapeError("batch feature width " +
                     std::to_string(batch.inputs[0].cols()) +
                     " does not match the configured input size " +
                     std::to_string(cfg.input_size));
  }
  if (cfg.dropout_prob < 0.0 || cfg.dropout_prob >= 1.0) {
    throw InvalidProbability("dropout probability must satisfy 0 <= p < 1");
  }

  ForwardCache cache;
  cache.training = training;
  cache.params_version = state.params_version;
  cache.mask = batch.mask;
  cache.labels = batch.labels;

  cache.layer1 = scan_layer(batch.inputs, batch.mask, state.params.layer1);
  cache.layer2 = scan_layer(cache.layer1.h, batch.mask, state.params.layer2);

  const int T = batch.steps();
  const Eigen::Index B = batch.size();
  const Eigen::Index H2 = state.params.layer2.Wf.rows();
  cache.drop_scale.resize(static_cast<std::size_t>(T));
  cache.head_input.resize(static_cast<std::size_t>(T));
  cache.y.resize(T, B);
  const bool use_dropout = training && cfg.dropout_prob > 0.0;
  for (int t = 0; t < T; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    cache.drop_scale[ti] = use_dropout
                               ? dropout_scales(B, H2, cfg.dropout_prob, rng)
                               : Matrix::Ones(B, H2);
    cache.head_input[ti] =
        cache.layer2.h[ti].cwiseProduct(cache.drop_scale[ti]);
    const Vector a = cache.head_input[ti] * state.params.head.w +
                     Vector::Constant(B, state.params.head.b);
    cache.y.row(t) = a.array().tanh().matrix().transpose();
  }

  const double count = batch.mask.sum();
  if (count <= 0.0) {
    throw EmptyLoss("batch mask excludes every timestep");
  }
  cache.loss = (batch.mask.array() *
                (cache.y.array() - batch.labels.array()).square())
                   .sum() /
               count;
  return cache;
}

NetworkParameters backward(const Batch& batch, const ForwardCache& cache,
                           const TrainState& state) {
  if (cache.params_version != state.params_version) {
    throw CacheMismatch(
        "forward cache is stale: parameters changed since the forward pass");
  }
  if (batch.steps() != static_cast<int>(cache.head_input.size()) ||
      batch.size() != cache.y.cols()) {
    throw CacheMismatch("forward cache does not match this batch");
  }
  const int T = batch.steps();
  const Eigen::Index B = batch.size();
  const double count = batch.mask.sum();

  NetworkParameters grads = make_parameters(state.config);

  // d loss / d y, masked mean of squared errors.
  const Matrix dy = (2.0 / count) *
                    (batch.mask.array() *
                     (cache.y.array() - cache.labels.array()))
                        .matrix();

  std::vector<Matrix> d_out2(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    const Array y_row = cache.y.row(t).transpose().array();
    const Vector da =
        (dy.row(t).transpose().array() * (1.0 - y_row * y_row)).matrix();
    grads.head.w += cache.head_input[ti].transpose() * da;
    grads.head.b += da.sum();
    const Matrix d_head_in = da * state.params.head.w.transpose();  // B x H2
    d_out2[ti] = d_head_in.cwiseProduct(cache.drop_scale[ti]);
  }

  LayerGrads l2 =
      backprop_layer(cache.layer2, cache.mask, d_out2, state.params.layer2);
  grads.layer2 = std::move(l2.g);
  LayerGrads l1 = backprop_layer(cache.layer1, cache.mask, l2.d_input,
                                 state.params.layer1);
  grads.layer1 = std::move(l1.g);
  return grads;
}

void adam_step(TrainState& state, const NetworkParameters& grads) {
  const AdamConfig& a = state.config.adam;
  auto g_refs = tensor_refs(const_cast<NetworkParameters&>(grads));
  auto p_refs = tensor_refs(state.params);
  auto m_refs = tensor_refs(state.adam_m);
  auto v_refs = tensor_refs(state.adam_v);

  for (const auto& ref : g_refs) {
    for (std::size_t i = 0; i < ref.size; ++i) {
      if (!std::isfinite(ref.data[i])) {
        throw GradientBlowup("non-finite gradient in " +
                             std::string(ref.name));
      }
    }
  }

  double clip_scale = 1.0;
  if (state.config.grad_clip > 0.0) {
    double norm_sq = 0.0;
    for (const auto& ref : g_refs) {
      for (std::size_t i = 0; i < ref.size; ++i) {
        norm_sq += ref.data[i] * ref.data[i];
      }
    }
    const double norm = std::sqrt(norm_sq);
    if (norm > state.config.grad_clip) {
      clip_scale = state.config.grad_clip / norm;
    }
  }

  const auto t = static_cast<double>(state.step + 1);
  const double m_corr = 1.0 - std::pow(a.beta1, t);
  const double v_corr = 1.0 - std::pow(a.beta2, t);
  for (std::size_t k = 0; k < g_refs.size(); ++k) {
    double* g = g_refs[k].data;
    double* p = p_refs[k].data;
    double* m = m_refs[k].data;
    double* v = v_refs[k].data;
    for (std::size_t i = 0; i < g_refs[k].size; ++i) {
      const double gi = g[i] * clip_scale;
      m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * gi;
      v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * gi * gi;
      const double m_hat = m[i] / m_corr;
      const double v_hat = v[i] / v_corr;
      p[i] -= a.alpha * m_hat / (std::sqrt(v_hat) + a.epsilon);
    }
  }
  ++state.step;
  ++state.params_version;
}

TrainState train(const NetworkConfig& cfg,
                 const std::vector<SequenceExample>& examples,
                 std::uint64_t seed,
                 std::vector<double>* wall_ms_per_step) {
  if (examples.empty()) {
    throw ShapeError("train requires a non-empty training set");
  }
  NetworkConfig config = cfg;
  if (config.input_size == 0) {
    config.input_size = static_cast<int>(examples[0].features.cols());
  }
  if (config.batch_size < 1) {
    throw ConfigError("batch_size must be >= 1");
  }

  TrainState state;
  state.config = config;
  state.run_seed = seed;
  std::mt19937_64 rng(seed);
  state.params = init_parameters(config, rng);
  state.adam_m = make_parameters(config);
  state.adam_v = make_parameters(config);

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  int step = 0;
  while (step < config.max_iterations) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0;
         start < order.size() && step < config.max_iterations;
         start += static_cast<std::size_t>(config.batch_size)) {
      const auto begin = std::chrono::steady_clock::now();
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<SequenceExample> members;
      members.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        members.push_back(examples[order[k]]);
      }
      const Batch batch = make_batch(members);
      const ForwardCache cache = forward(batch, state, true, rng);
      if (!std::isfinite(cache.loss)) {
        throw GradientBlowup("training loss is non-finite at step " +
                             std::to_string(step));
      }
      const NetworkParameters grads = backward(batch, cache, state);
      adam_step(state, grads);
      state.loss_history.push_back(cache.loss);
      if (wall_ms_per_step != nullptr) {
        const auto elapsed = std::chrono::steady_clock::now() - begin;
        wall_ms_per_step->push_back(
            std::chrono::duration<double, std::milli>(elapsed).count());
      }
      ++step;
    }
  }
  return state;
}

Prediction predict(const TrainState& state, const Matrix& features,
                   int start_cycle) {
  if (features.cols() != state.config.input_size) {
    throw ShapeError("feature width " + std::to_string(features.cols()) +
                     " does not match the model input size " +
                     std::to_string(state.config.input_size));
  }
  if (features.rows() == 0) {
    throw ShapeError("predict requires at least one cycle of features");
  }
  SequenceExample ex;
  ex.features = features;
  ex.labels = Vector::Zero(features.rows());
  ex.mask.assign(static_cast<std::size_t>(features.rows()), true);
  const Batch batch = make_batch({ex});
  std::mt19937_64 rng(0);  // eval mode draws nothing
  const ForwardCache cache = forward(batch, state, false, rng);

  Prediction out;
  out.per_cycle_rul.start_cycle = start_cycle;
  out.per_cycle_rul.values.resize(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index t = 0; t < features.rows(); ++t) {
    out.per_cycle_rul.values[static_cast<std::size_t>(t)] =
        denormalize_rul(cache.y(t, 0), state.config.label_cap);
  }
  out.last_point = out.per_cycle_rul.values.back();
  return out;
}

// --- checkpoint --------------------------------------------------------------

namespace {

using nlohmann::json;

json tensors_to_json(const NetworkParameters& p) {
  json out;
  for (const auto& ref : tensor_refs(const_cast<NetworkParameters&>(p))) {
    out[ref.name] = std::vector<double>(ref.data, ref.data + ref.size);
  }
  return out;
}

void tensors_from_json(const json& j, NetworkParameters& p) {
  for (auto& ref : tensor_refs(p)) {
    const auto& arr = j.at(ref.name);
    if (arr.size() != ref.size) {
      throw ShapeError(std::string("checkpoint tensor ") + ref.name +
                       " has wrong size");
    }
    for (std::size_t i = 0; i < ref.size; ++i) {
      ref.data[i] = arr[i].get<double>();
    }
  }
}

}  // namespace

void save_checkpoint(const TrainState& state,
                     const std::filesystem::path& path) {
  json j;
  j["format"] = kCheckpointFormat;
  j["config"] = {
      {"input_size", state.config.input_size},
      {"layer_sizes", state.config.layer_sizes},
      {"dropout_prob", state.config.dropout_prob},
      {"label_cap", state.config.label_cap},
      {"adam",
       {{"alpha", state.config.adam.alpha},
        {"beta1", state.config.adam.beta1},
        {"beta2", state.config.adam.beta2},
        {"epsilon", state.config.adam.epsilon}}},
      {"max_iterations", state.config.max_iterations},
      {"batch_size", state.config.batch_size},
      {"grad_clip", state.config.grad_clip},
  };
  j["params"] = tensors_to_json(state.params);
  j["adam_m"] = tensors_to_json(state.adam_m);
  j["adam_v"] = tensors_to_json(state.adam_v);
  j["step"] = state.step;
  j["run_seed"] = state.run_seed;
  json stats = json::array();
  for (const auto& s : state.normalization) {
    stats.push_back({{"sensor", s.sensor}, {"min", s.min}, {"max", s.max}});
  }
  j["normalization"] = stats;
  io::write_file(path, j.dump(2) + "\n");
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  const json j = json::parse(io::read_file(path));
  if (j.at("format").get<std::string>() != kCheckpointFormat) {
    throw ConfigError("unsupported checkpoint format: " +
                      j.at("format").get<std::string>());
  }
  TrainState state;
  const json& c = j.at("config");
  state.config.input_size = c.at("input_size").get<int>();
  state.config.layer_sizes = {c.at("layer_sizes")[0].get<int>(),
                              c.at("layer_sizes")[1].get<int>()};
  state.config.dropout_prob = c.at("dropout_prob").get<double>();
  state.config.label_cap = c.at("label_cap").get<int>();
  state.config.adam.alpha = c.at("adam").at("alpha").get<double>();
  state.config.adam.beta1 = c.at("adam").at("beta1").get<double>();
  state.config.adam.beta2 = c.at("adam").at("beta2").get<double>();
  state.config.adam.epsilon = c.at("adam").at("epsilon").get<double>();
  state.config.max_iterations = c.at("max_iterations").get<int>();
  state.config.batch_size = c.at("batch_size").get<int>();
  state.config.grad_clip = c.at("grad_clip").get<double>();

  state.params = make_parameters(state.config);
  state.adam_m = make_parameters(state.config);
  state.adam_v = make_parameters(state.config);
  tensors_from_json(j.at("params"), state.params);
  tensors_from_json(j.at("adam_m"), state.adam_m);
  tensors_from_json(j.at("adam_v"), state.adam_v);
  state.step = j.at("step").get<std::int64_t>();
  state.run_seed = j.at("run_seed").get<std::uint64_t>();
  for (const auto& s : j.at("normalization")) {
    NormalizationStats stats;
    stats.sensor = s.at("sensor").get<int>();
    stats.min = s.at("min").get<double>();
    stats.max = s.at("max").get<double>();
    state.normalization.push_back(stats);
  }
  return state;
}

}  // namespace trendrul::neural
