#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "trafcast/matrix.hpp"
#include "trafcast/types.hpp"

namespace trafcast {

enum class HeadMode { Predict, Classify };

// Gate order used throughout: forget, input, candidate, output.
enum GateIndex { kForget = 0, kInput = 1, kCandidate = 2, kOutput = 3 };

struct LstmParams {
    int n_in = 0;
    int n_hid = 0;
    std::array<Matrix, 4> W;  // input weights, n_hid x n_in
    std::array<Matrix, 4> R;  // recurrent weights, n_hid x n_hid
    std::array<Vec, 4> b;     // biases, n_hid

    static LstmParams zeros(int n_in, int n_hid);
};

struct HeadParams {
    HeadMode mode = HeadMode::Classify;
    Matrix w;  // n_out x n_hid
    Vec b;     // n_out

    int n_out() const { return w.rows; }
    static HeadParams zeros(HeadMode mode, int n_hid, int n_out);
};

// Feature-wise mean/std, computed on the training split only.
struct NormalizationStats {
    Vec mu;
    Vec sigma;

    double normalize(double x, int feature) const { return (x - mu[feature]) / sigma[feature]; }
    double denormalize(double z, int feature) const { return z * sigma[feature] + mu[feature]; }
};

struct Network {
    LstmParams lstm;
    HeadParams head;
    NormalizationStats norm;
    // Predict mode: head trained against feature-normalized targets,
    // denormalized by predict().
    bool normalized_targets = false;
    int version = 1;
    std::map<std::string, std::string> metadata;
};

struct GateCache {
    Vec gates[4];
    Vec c;
    Vec tanh_c;
    Vec h;
};

// One LSTM update; h/c/tanh(c)/gates land in the cache entry.
void lstm_step(const LstmParams& p, const double* x, const Vec& h_prev, const Vec& c_prev,
               GateCache& out);

struct ForwardCache {
    Matrix x_norm;                 // T x n_in, missing values imputed to 0
    std::vector<GateCache> steps;  // length T
    Matrix z;                      // raw head outputs, T x n_out
};

// Normalizes inputs (missing velocity imputed to the feature mean), runs the
// LSTM from h = c = 0 with the head applied at every step. Classify mode
// returns per-step softmax probabilities, Predict mode raw head outputs.
// Throws on non-finite inputs (after imputation).
Matrix forward(const Network& net, const Matrix& inputs, ForwardCache* cache = nullptr);

Vec softmax(const Vec& z);

// Per-step losses. `valid`, when given, masks steps out of the supervision.
double loss_weighted_cross_entropy(const Matrix& probs, const std::vector<int>& targets,
                                   double p_r, const std::vector<std::uint8_t>* valid = nullptr);
struct MseResult {
    double mse;
    double rmse;
};
MseResult loss_mse(const Matrix& outputs, const Matrix& targets,
                   const std::vector<std::uint8_t>* valid = nullptr);

// Gradients of the losses with respect to the raw head output z
// (pre-softmax logits in Classify mode).
Matrix grad_weighted_cross_entropy(const Matrix& probs, const std::vector<int>& targets,
                                   double p_r, const std::vector<std::uint8_t>* valid = nullptr);
Matrix grad_mse(const Matrix& outputs, const Matrix& targets,
                const std::vector<std::uint8_t>* valid = nullptr);

struct Gradients {
    LstmParams lstm;
    HeadParams head;

    static Gradients zeros_like(const Network& net);
};

// Backpropagation through time over the whole cached sequence.
Gradients backward(const Network& net, const ForwardCache& cache, const Matrix& dz);

// Parameter traversal (fixed order shared by Adam state and serialization).
void visit_params(LstmParams& lstm, HeadParams& head, const std::function<void(double&)>& fn);
size_t param_count(const LstmParams& lstm, const HeadParams& head);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    Vec m;
    Vec v;

    void init(size_t n);
};

// Bias-corrected moment update: theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(AdamState& state, Network& net, const Gradients& grads, double lr);

// Scales gradients so the global L2 norm does not exceed max_norm; returns
// the pre-clip norm.
double clip_gradients(Gradients& grads, double max_norm);

struct TrainingSchedule {
    int eras = 10;
    int epochs_per_era = 10;
    double base_lr = 1e-2;
    double era_decay = 0.5;  // learning-rate factor at each era boundary
    int batch_size = 24;
    std::uint64_t shuffle_seed = 1;

    int total_epochs() const { return eras * epochs_per_era; }
};

struct Sample {
    Matrix inputs;                    // T x n_in
    std::vector<int> class_targets;   // Classify mode, length T
    Matrix pred_targets;              // Predict mode, T x n_out
    std::vector<std::uint8_t> valid;  // optional supervision mask, length T
};

struct TrainConfig {
    int n_in = 2;
    int n_hid = 16;
    int n_out = 2;
    HeadMode mode = HeadMode::Classify;
    TrainingSchedule schedule;
    double grad_clip = 5.0;
    double p_r = 0.5;  // positive rate for the weighted cross-entropy
    std::uint64_t init_seed = 1;
    bool normalize_targets = true;  // Predict mode only
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    double metric = 0.0;  // accuracy (Classify) or rmse in training space (Predict)
};

// Weight init + normalization stats; the network train() starts from.
Network init_network(const TrainConfig& config, const std::vector<Sample>& training);

// Full training loop: shuffled batches, per-era learning rate, gradient
// clipping, ADAM. Deterministic given the seeds. Throws on divergence.
Network train(const std::vector<Sample>& training, const TrainConfig& config,
              std::vector<EpochStats>* trace = nullptr);

// Per-step (label, confidence) with confidence = 2 * p_positive - 1; ties
// resolve to the negative class.
std::vector<std::pair<int, double>> classify_with_confidence(const Network& net,
                                                             const Matrix& inputs);

// Predict-mode inference, denormalizing targets when the network was trained
// on normalized ones.
Matrix predict(const Network& net, const Matrix& inputs);

struct AccuracyMetrics {
    double accuracy = 0.0;
    double weighted_accuracy = 0.0;
};
AccuracyMetrics accuracy_metrics(const std::vector<int>& predictions,
                                 const std::vector<int>& targets, double p_r);

// Self-describing JSON model container (dims, weights, stats, metadata).
void save_network(const std::string& path, const Network& net);
Network load_network(const std::string& path);

}  // namespace trafcast
