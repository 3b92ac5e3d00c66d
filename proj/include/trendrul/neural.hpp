#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "trendrul/timeseries.hpp"

namespace trendrul::neural {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Weights of one LSTM layer, gate order f, i, c, o.
struct LstmLayerParams {
  Matrix Wf, Wi, Wc, Wo;  // hidden x input
  Matrix Rf, Ri, Rc, Ro;  // hidden x hidden
  Vector bf, bi, bc, bo;  // hidden

  int input_size() const noexcept { return static_cast<int>(Wf.cols()); }
  int hidden_size() const noexcept { return static_cast<int>(Wf.rows()); }
};

struct DenseParams {
  Vector w;
  double b = 0.0;
};

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct NetworkConfig {
  int input_size = 0;                      // |J|
  std::array<int, 2> layer_sizes{128, 100};
  double dropout_prob = 0.5;               // P_c
  int label_cap = 130;
  AdamConfig adam;
  int max_iterations = 0;  // total optimizer steps
  int batch_size = 32;
  double grad_clip = 0.0;  // 0 = off
};

// Also reused as the gradient container (same shapes).
struct NetworkParameters {
  LstmLayerParams layer1, layer2;
  DenseParams head;
};

struct CellState {
  Vector h;  // short-term state
  Vector C;  // long-term state
};

// Gate activations kept for the single-cell backward pass.
struct CellCache {
  Vector x, h_prev, C_prev;
  Vector f, i, c_tilde, o, C, tanh_C;
};

// One variable-length training example (unpadded).
struct SequenceExample {
  Matrix features;         // T x input_size
  Vector labels;           // T, normalized to [-1, 1]
  std::vector<bool> mask;  // T, false rows only as a prefix
};

// Padded batch in timestep-major form.
struct Batch {
  std::vector<Matrix> inputs;  // T of B x input_size
  Matrix labels;               // T x B
  Matrix mask;                 // T x B, 0/1
  int steps() const noexcept { return static_cast<int>(inputs.size()); }
  int size() const noexcept {
    return inputs.empty() ? 0 : static_cast<int>(inputs[0].rows());
  }
};

Batch make_batch(const std::vector<SequenceExample>& examples);

struct LayerCache {
  std::vector<Matrix> x;                    // input to the layer per step
  std::vector<Matrix> f, i, c_tilde, o;     // gate activations
  std::vector<Matrix> c, tanh_c;            // cell state and its tanh
  std::vector<Matrix> h_prev, c_prev;       // incoming state per step
  std::vector<Matrix> h;                    // masked output per step
};

struct ForwardCache {
  LayerCache layer1, layer2;
  std::vector<Matrix> drop_scale;  // keep-mask / (1 - P_c), identity in eval
  std::vector<Matrix> head_input;  // layer2 output after dropout
  Matrix y;                        // T x B tanh head outputs
  Matrix mask;                     // T x B
  Matrix labels;                   // T x B
  double loss = 0.0;
  std::uint64_t params_version = 0;
  bool training = false;
};

struct TrainState {
  NetworkConfig config;
  NetworkParameters params;
  NetworkParameters adam_m, adam_v;
  std::int64_t step = 0;
  std::uint64_t params_version = 0;
  std::vector<double> loss_history;
  std::uint64_t run_seed = 0;
  std::vector<NormalizationStats> normalization;  // per retained sensor
};

// --- elementary operations -------------------------------------------------

// f = sig(Wf x + Rf h + bf), i likewise, c~ = tanh(Wc x + Rc h + bc),
// C = f.C_prev + i.c~, o = sig(Wo x + Ro h + bo), h = o.tanh(C).
std::pair<CellState, CellCache> lstm_cell_forward(const Vector& input,
                                                  const CellState& prev,
                                                  const LstmLayerParams& p);

// Recurrent scan over one sequence; masked timesteps leave state unchanged
// and emit a zero row. Throws MaskError for an interior false mask.
Matrix lstm_layer_forward(const Matrix& sequence,
                          const std::vector<bool>& mask,
                          const LstmLayerParams& p);

// Inverted dropout: training zeroes entries with probability p and scales
// survivors by 1/(1-p); eval is the identity.
Matrix dropout(const Matrix& x, double p, bool training, std::mt19937_64& rng);

double dense_tanh_head(const Vector& h, const DenseParams& p);

// y in [-1, 1] <-> RUL in [0, cap].
double denormalize_rul(double y, int cap);
double normalize_rul(double rul, int cap);

// Mean of (pred - label)^2 over mask-true timesteps only.
double mse_loss(const Vector& pred, const Vector& label,
                const std::vector<bool>& mask);

// --- full network -----------------------------------------------------------

NetworkParameters init_parameters(const NetworkConfig& cfg,
                                  std::mt19937_64& rng);
NetworkParameters zeros_like(const NetworkParameters& p);

// Full forward pass (masking -> two LSTM layers -> dropout -> dense tanh
// head -> masked MSE). Dropout draws come from `rng` in a fixed order.
ForwardCache forward(const Batch& batch, const TrainState& state,
                     bool training, std::mt19937_64& rng);

// Exact gradients of the forward loss for every parameter. Throws
// CacheMismatch when the cache predates the current parameters.
NetworkParameters backward(const Batch& batch, const ForwardCache& cache,
                           const TrainState& state);

// Standard Adam with bias correction. Throws GradientBlowup on non-finite
// gradients.
void adam_step(TrainState& state, const NetworkParameters& grads);

// Algorithm: shuffle each epoch, pad per batch, forward/backward/adam until
// max_iterations. All randomness derives from seed.
TrainState train(const NetworkConfig& cfg,
                 const std::vector<SequenceExample>& examples,
                 std::uint64_t seed,
                 std::vector<double>* wall_ms_per_step = nullptr);

struct Prediction {
  Series per_cycle_rul;
  double last_point = 0.0;
};

// Eval-mode forward over one unit's feature rows; outputs denormalized to
// [0, cap].
Prediction predict(const TrainState& state, const Matrix& features,
                   int start_cycle = 1);

// --- checkpoint -------------------------------------------------------------

inline constexpr const char* kCheckpointFormat = "trendrul-checkpoint-v1";

void save_checkpoint(const TrainState& state, const std::filesystem::path& p);
TrainState load_checkpoint(const std::filesystem::path& p);

}  // namespace trendrul::neural
