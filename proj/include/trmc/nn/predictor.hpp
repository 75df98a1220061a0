#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "trmc/dataset.hpp"
#include "trmc/metropolis.hpp"
#include "trmc/nn/matrix.hpp"
#include "trmc/rng.hpp"

namespace trmc::nn {

enum class Optimizer {
    Momentum,  ///< classical momentum SGD
    Adam,      ///< adaptive moments (beta1 0.9, beta2 0.999, eps 1e-8)
};

const char* to_string(Optimizer opt);
Optimizer optimizer_from_string(const std::string& name);

/**
 * Architecture and training hyperparameters of the convolutional-recurrent
 * predictor. Per time row the pipeline is
 *
 *   dense (n_sites -> dense_in, relu)
 *   -> conv1 (1 -> conv1_channels, periodic, relu)
 *   -> conv2 (conv1_channels -> conv2_channels, periodic, relu)
 *   -> inverted dropout
 *   -> flatten
 *
 * and the window of per-row features feeds a single LSTM whose final hidden
 * state maps through a dense layer + sigmoid to per-site probabilities.
 */
struct PredictorConfig {
    int n_sites = 50;
    int window = 30;

    int dense_in = 64;
    int conv1_channels = 16;
    int conv2_channels = 16;
    int conv1_kernel = 5;
    int conv2_kernel = 5;
    double dropout_rate = 0.25;
    int lstm_hidden = 64;

    double alpha = 0.01;  ///< vehicle-count penalty weight in the loss
    Optimizer optimizer = Optimizer::Momentum;
    double learning_rate = 0.05;
    double momentum = 0.9;
    double lr_decay = 1.0;     ///< step-decay factor (1 = constant rate)
    int lr_decay_every = 0;    ///< epochs between decays (0 = never)
    int epochs = 200;
    int batch_size = 32;
    std::uint64_t init_seed = 1;

    int feature_size() const { return conv2_channels * dense_in; }
    void validate() const;
};

struct LstmWeights {
    // Gate order i, f, g, o stacked along rows: all are 4*hidden tall.
    Matrix w_x;  // 4H x feature_size
    Matrix w_h;  // 4H x H
    Vector b;    // 4H
};

struct PredictorModel {
    PredictorConfig config;
    Matrix w_in;      // dense_in x n_sites
    Vector b_in;      // dense_in
    Matrix conv1_w;   // conv1_channels x (1 * conv1_kernel)
    Vector conv1_b;
    Matrix conv2_w;   // conv2_channels x (conv1_channels * conv2_kernel)
    Vector conv2_b;
    LstmWeights lstm;
    Matrix w_out;     // n_sites x lstm_hidden
    Vector b_out;     // n_sites
    std::uint64_t dropout_seed = 0;  ///< base of the dropout mask streams
};

/// Gradient of the loss with respect to every trainable tensor.
struct Gradients {
    Matrix w_in;
    Vector b_in;
    Matrix conv1_w;
    Vector conv1_b;
    Matrix conv2_w;
    Vector conv2_b;
    Matrix lstm_wx;
    Matrix lstm_wh;
    Vector lstm_b;
    Matrix w_out;
    Vector b_out;
};

struct EpochMetrics {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double test_loss = 0.0;
    double test_accuracy = 0.0;
};

struct TrainingHistory {
    std::vector<EpochMetrics> epochs;
};

/// Named view of a tensor's storage; used by the checkpoint writer and the
/// finite-difference tests. Order is fixed and part of the file format.
struct TensorRef {
    std::string name;
    double* data;
    std::size_t size;
    int rows;
    int cols;
};

std::vector<TensorRef> tensor_refs(PredictorModel& model);
std::vector<TensorRef> tensor_refs(Gradients& grads);

/// Fresh model: fan-in-scaled uniform weights drawn from init_seed in tensor
/// order, zero biases except the LSTM forget gate (set to 1).
PredictorModel init_model(const PredictorConfig& config);

/**
 * Maps a window (window x n_sites binary cells, row-major) to n_sites
 * occupancy probabilities. With training=false this is a pure deterministic
 * function of (weights, input); training=true applies inverted dropout with
 * masks drawn from `dropout_rng` (required in that case).
 */
Vector forward(const PredictorModel& model, std::span<const std::uint8_t> input,
               bool training = false, Xoshiro256StarStar* dropout_rng = nullptr);

/**
 * Penalized binary cross-entropy:
 *   -(1/N) sum_i [y_i log p_i + (1-y_i) log(1-p_i)] + alpha*(n_vehicle - sum_i p_i)
 * with probabilities clamped to [1e-7, 1 - 1e-7] before the logs. The penalty
 * uses the raw predicted mass; it vanishes when sum_i p_i equals n_vehicle.
 */
double loss(const Vector& pred, std::span<const std::uint8_t> target, double alpha,
            int n_vehicle);

/// Fraction of sites whose thresholded prediction (p > 0.5) matches the target.
double accuracy(const Vector& pred, std::span<const std::uint8_t> target);

/**
 * Gradients for one sample. Dropout masks are drawn from `dropout_rng` when
 * given (training-mode forward); otherwise the deterministic inference path
 * is differentiated. Returns the sample loss; grads must be zero-initialized
 * shapes (accumulates into them).
 */
double backward(const PredictorModel& model, std::span<const std::uint8_t> input,
                std::span<const std::uint8_t> target, Xoshiro256StarStar* dropout_rng,
                Gradients& grads);

Gradients make_gradients(const PredictorModel& model);

using EpochCallback = std::function<void(int epoch, const EpochMetrics&)>;

/**
 * Mini-batch gradient descent with momentum over the split dataset, using the
 * hyperparameters in model.config. Per-epoch metrics are evaluated with
 * dropout off on both the train and the held-out test set. Deterministic for
 * a fixed init_seed (batch order, dropout masks and updates included).
 * Throws std::runtime_error if the loss turns non-finite.
 */
TrainingHistory train(PredictorModel& model, const SplitDataset& data,
                      const EpochCallback& progress = {});

/// Mean loss / accuracy over a dataset with dropout off.
EpochMetrics evaluate(const PredictorModel& model, const Dataset& train_part,
                      const Dataset& test_part);

/**
 * Recursive forecast: starting from a window x n_sites seed, predict the next
 * row, threshold at 0.5, slide the window, repeat `horizon` times. The result
 * holds the seed rows followed by the horizon predicted rows.
 */
TimeSpaceDiagram rollout(const PredictorModel& model,
                         std::span<const std::uint8_t> seed_window, int horizon);

void write_history_csv(const TrainingHistory& history, const std::string& path);

// Internal pieces exposed for the test suite.
namespace detail {

/// Periodic (ring) 1-D convolution: out[(o, x)] = b[o] +
/// sum_{ci, j} w[o][ci*k + j] * in[ci*length + (x + j - k/2) mod length].
void conv1d_periodic(const Matrix& w, const Vector& bias, const double* in,
                     int in_channels, int length, double* out);

/// Inverted dropout mask: each element is 1/(1-rate) with probability 1-rate,
/// else 0. rate = 0 gives all ones.
void fill_dropout_mask(double rate, Xoshiro256StarStar& rng, double* mask,
                       std::size_t n);

double sigmoid(double z);

}  // namespace detail

}  // namespace trmc::nn
