#include "trafcast/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace trafcast {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

LstmParams LstmParams::zeros(int n_in, int n_hid) {
    LstmParams p;
    p.n_in = n_in;
    p.n_hid = n_hid;
    for (int g = 0; g < 4; ++g) {
        p.W[g] = Matrix(n_hid, n_in);
        p.R[g] = Matrix(n_hid, n_hid);
        p.b[g] = Vec(n_hid, 0.0);
    }
    return p;
}

HeadParams HeadParams::zeros(HeadMode mode, int n_hid, int n_out) {
    HeadParams h;
    h.mode = mode;
    h.w = Matrix(n_out, n_hid);
    h.b = Vec(n_out, 0.0);
    return h;
}

Gradients Gradients::zeros_like(const Network& net) {
    Gradients g;
    g.lstm = LstmParams::zeros(net.lstm.n_in, net.lstm.n_hid);
    g.head = HeadParams::zeros(net.head.mode, net.lstm.n_hid, net.head.n_out());
    return g;
}

void lstm_step(const LstmParams& p, const double* x, const Vec& h_prev, const Vec& c_prev,
               GateCache& out) {
    const int nh = p.n_hid;
    for (int g = 0; g < 4; ++g) {
        Vec& a = out.gates[g];
        a = p.b[g];
        matvec_acc(p.W[g], x, a.data());
        matvec_acc(p.R[g], h_prev.data(), a.data());
        if (g == kCandidate)
            for (double& v : a) v = std::tanh(v);
        else
            for (double& v : a) v = sigmoid(v);
    }
    out.c.resize(nh);
    out.tanh_c.resize(nh);
    out.h.resize(nh);
    for (int i = 0; i < nh; ++i) {
        out.c[i] = out.gates[kForget][i] * c_prev[i] + out.gates[kInput][i] * out.gates[kCandidate][i];
        out.tanh_c[i] = std::tanh(out.c[i]);
        out.h[i] = out.gates[kOutput][i] * out.tanh_c[i];
    }
}

Vec softmax(const Vec& z) {
    Vec p(z.size());
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - zmax);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

Matrix forward(const Network& net, const Matrix& inputs, ForwardCache* cache) {
    const int T = inputs.rows;
    const int n_in = net.lstm.n_in;
    const int nh = net.lstm.n_hid;
    const int n_out = net.head.n_out();
    if (inputs.cols != n_in) throw std::invalid_argument("input feature count mismatch");

    Matrix x_norm(T, n_in);
    for (int t = 0; t < T; ++t)
        for (int f = 0; f < n_in; ++f) {
            const double x = inputs(t, f);
            // Missing observations sit at the feature mean, i.e. normalized 0.
            x_norm(t, f) = is_missing(x) ? 0.0 : net.norm.normalize(x, f);
            if (!std::isfinite(x_norm(t, f)))
                throw std::invalid_argument("non-finite input feature");
        }

    ForwardCache local;
    ForwardCache& fc = cache ? *cache : local;
    fc.x_norm = std::move(x_norm);
    fc.steps.resize(T);
    fc.z = Matrix(T, n_out);

    Vec h(nh, 0.0), c(nh, 0.0);
    Matrix out(T, n_out);
    for (int t = 0; t < T; ++t) {
        lstm_step(net.lstm, fc.x_norm.row(t), h, c, fc.steps[t]);
        h = fc.steps[t].h;
        c = fc.steps[t].c;

        double* zt = fc.z.row(t);
        for (int o = 0; o < n_out; ++o) zt[o] = net.head.b[o];
        matvec_acc(net.head.w, h.data(), zt);

        if (net.head.mode == HeadMode::Classify) {
            const Vec p = softmax(Vec(zt, zt + n_out));
            for (int o = 0; o < n_out; ++o) out(t, o) = p[o];
        } else {
            for (int o = 0; o < n_out; ++o) out(t, o) = zt[o];
        }
    }
    return out;
}

double loss_weighted_cross_entropy(const Matrix& probs, const std::vector<int>& targets,
                                   double p_r, const std::vector<std::uint8_t>* valid) {
    if (p_r <= 0.0 || p_r >= 1.0) throw std::invalid_argument("p_r must lie in (0,1)");
    if (static_cast<int>(targets.size()) != probs.rows)
        throw std::invalid_argument("target length mismatch");
    double loss = 0.0;
    int n = 0;
    for (int t = 0; t < probs.rows; ++t) {
        if (valid && !(*valid)[t]) continue;
        const double o = clamp_prob(probs(t, 1));
        loss -= targets[t] ? (1.0 - p_r) * std::log(o) : p_r * std::log(1.0 - o);
        ++n;
    }
    return n ? loss / n : 0.0;
}

Matrix grad_weighted_cross_entropy(const Matrix& probs, const std::vector<int>& targets,
                                   double p_r, const std::vector<std::uint8_t>* valid) {
    if (p_r <= 0.0 || p_r >= 1.0) throw std::invalid_argument("p_r must lie in (0,1)");
    Matrix dz(probs.rows, probs.cols);
    int n = 0;
    for (int t = 0; t < probs.rows; ++t)
        if (!valid || (*valid)[t]) ++n;
    if (n == 0) return dz;
    for (int t = 0; t < probs.rows; ++t) {
        if (valid && !(*valid)[t]) continue;
        const double o = probs(t, 1);
        const double oc = clamp_prob(o);
        // d loss / d o, then through the 2-class softmax: do/dz1 = o(1-o).
        const double dLdo = targets[t] ? -(1.0 - p_r) / oc : p_r / (1.0 - oc);
        const double g = dLdo * o * (1.0 - o) / n;
        dz(t, 1) = g;
        dz(t, 0) = -g;
    }
    return dz;
}

MseResult loss_mse(const Matrix& outputs, const Matrix& targets,
                   const std::vector<std::uint8_t>* valid) {
    if (outputs.rows != targets.rows || outputs.cols != targets.cols)
        throw std::invalid_argument("shape mismatch");
    double acc = 0.0;
    int n = 0;
    for (int t = 0; t < outputs.rows; ++t) {
        if (valid && !(*valid)[t]) continue;
        for (int o = 0; o < outputs.cols; ++o) {
            const double d = outputs(t, o) - targets(t, o);
            acc += d * d;
        }
        ++n;
    }
    const double mse = n ? acc / (static_cast<double>(n) * outputs.cols) : 0.0;
    return {mse, std::sqrt(mse)};
}

Matrix grad_mse(const Matrix& outputs, const Matrix& targets,
                const std::vector<std::uint8_t>* valid) {
    Matrix dz(outputs.rows, outputs.cols);
    int n = 0;
    for (int t = 0; t < outputs.rows; ++t)
        if (!valid || (*valid)[t]) ++n;
    if (n == 0) return dz;
    const double scale = 2.0 / (static_cast<double>(n) * outputs.cols);
    for (int t = 0; t < outputs.rows; ++t) {
        if (valid && !(*valid)[t]) continue;
        for (int o = 0; o < outputs.cols; ++o)
            dz(t, o) = scale * (outputs(t, o) - targets(t, o));
    }
    return dz;
}

Gradients backward(const Network& net, const ForwardCache& cache, const Matrix& dz) {
    const int T = static_cast<int>(cache.steps.size());
    const int nh = net.lstm.n_hid;
    Gradients g = Gradients::zeros_like(net);

    Vec dh(nh, 0.0), dc(nh, 0.0);
    Vec da[4];
    for (auto& v : da) v.resize(nh);
    const Vec zero(nh, 0.0);

    for (int t = T - 1; t >= 0; --t) {
        const GateCache& s = cache.steps[t];
        const Vec& h_prev = t > 0 ? cache.steps[t - 1].h : zero;
        const Vec& c_prev = t > 0 ? cache.steps[t - 1].c : zero;

        // Head at step t.
        const double* dzt = dz.row(t);
        outer_acc(g.head.w, dzt, s.h.data());
        for (int o = 0; o < net.head.n_out(); ++o) g.head.b[o] += dzt[o];
        matvec_transpose_acc(net.head.w, dzt, dh.data());

        for (int i = 0; i < nh; ++i) {
            const double go = s.gates[kOutput][i];
            const double th = s.tanh_c[i];
            dc[i] += dh[i] * go * (1.0 - th * th);
            da[kOutput][i] = dh[i] * th * go * (1.0 - go);
            const double gf = s.gates[kForget][i];
            const double gi = s.gates[kInput][i];
            const double gc = s.gates[kCandidate][i];
            da[kForget][i] = dc[i] * c_prev[i] * gf * (1.0 - gf);
            da[kInput][i] = dc[i] * gc * gi * (1.0 - gi);
            da[kCandidate][i] = dc[i] * gi * (1.0 - gc * gc);
        }

        std::fill(dh.begin(), dh.end(), 0.0);
        for (int gate = 0; gate < 4; ++gate) {
            outer_acc(g.lstm.W[gate], da[gate].data(), cache.x_norm.row(t));
            outer_acc(g.lstm.R[gate], da[gate].data(), h_prev.data());
            for (int i = 0; i < nh; ++i) g.lstm.b[gate][i] += da[gate][i];
            matvec_transpose_acc(net.lstm.R[gate], da[gate].data(), dh.data());
        }
        for (int i = 0; i < nh; ++i) dc[i] *= s.gates[kForget][i];
    }
    return g;
}

void visit_params(LstmParams& lstm, HeadParams& head, const std::function<void(double&)>& fn) {
    for (int g = 0; g < 4; ++g) {
        for (double& v : lstm.W[g].a) fn(v);
        for (double& v : lstm.R[g].a) fn(v);
        for (double& v : lstm.b[g]) fn(v);
    }
    for (double& v : head.w.a) fn(v);
    for (double& v : head.b) fn(v);
}

size_t param_count(const LstmParams& lstm, const HeadParams& head) {
    size_t n = 0;
    visit_params(const_cast<LstmParams&>(lstm), const_cast<HeadParams&>(head),
                 [&n](double&) { ++n; });
    return n;
}

void AdamState::init(size_t n) {
    step = 0;
    m.assign(n, 0.0);
    v.assign(n, 0.0);
}

void adam_step(AdamState& state, Network& net, const Gradients& grads, double lr) {
    const size_t n = param_count(net.lstm, net.head);
    if (state.m.size() != n) state.init(n);
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, state.step);
    const double bc2 = 1.0 - std::pow(state.beta2, state.step);

    std::vector<double> flat_grads;
    flat_grads.reserve(n);
    visit_params(const_cast<LstmParams&>(grads.lstm), const_cast<HeadParams&>(grads.head),
                 [&flat_grads](double& g) { flat_grads.push_back(g); });

    size_t i = 0;
    visit_params(net.lstm, net.head, [&](double& p) {
        const double g = flat_grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        p -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
        ++i;
    });
}

double clip_gradients(Gradients& grads, double max_norm) {
    double sq = 0.0;
    visit_params(grads.lstm, grads.head, [&sq](double& g) { sq += g * g; });
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        visit_params(grads.lstm, grads.head, [scale](double& g) { g *= scale; });
    }
    return norm;
}

namespace {

NormalizationStats compute_norm_stats(const std::vector<Sample>& data, int n_in) {
    NormalizationStats st;
    st.mu.assign(n_in, 0.0);
    st.sigma.assign(n_in, 0.0);
    for (int f = 0; f < n_in; ++f) {
        double sum = 0.0, sq = 0.0;
        long long n = 0;
        for (const auto& s : data)
            for (int t = 0; t < s.inputs.rows; ++t) {
                const double x = s.inputs(t, f);
                if (is_missing(x)) continue;
                sum += x;
                sq += x * x;
                ++n;
            }
        if (n == 0) throw std::runtime_error("feature with no observed values");
        const double mu = sum / n;
        const double var = std::max(0.0, sq / n - mu * mu);
        if (var <= 0.0) throw std::runtime_error("constant feature rejected (sigma = 0)");
        st.mu[f] = mu;
        st.sigma[f] = std::sqrt(var);
    }
    return st;
}

}  // namespace

Network init_network(const TrainConfig& config, const std::vector<Sample>& training) {
    if (training.empty()) throw std::invalid_argument("empty training set");
    Network net;
    net.lstm = LstmParams::zeros(config.n_in, config.n_hid);
    net.head = HeadParams::zeros(config.mode, config.n_hid, config.n_out);
    net.norm = compute_norm_stats(training, config.n_in);
    net.normalized_targets = config.mode == HeadMode::Predict && config.normalize_targets;

    std::mt19937_64 rng(config.init_seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(config.n_hid));
    std::uniform_real_distribution<double> dist(-bound, bound);
    visit_params(net.lstm, net.head, [&](double& p) { p = dist(rng); });

    net.metadata["n_in"] = std::to_string(config.n_in);
    net.metadata["n_hid"] = std::to_string(config.n_hid);
    net.metadata[config.mode == HeadMode::Classify ? "n_class" : "n_pred"] =
        std::to_string(config.n_out);
    net.metadata["init_seed"] = std::to_string(config.init_seed);
    return net;
}

Network train(const std::vector<Sample>& training, const TrainConfig& config,
              std::vector<EpochStats>* trace) {
    Network net = init_network(config, training);
    const bool classify = config.mode == HeadMode::Classify;

    // Predict mode trains against feature-normalized targets (targets are
    // future means of the same features, so the input stats apply).
    std::vector<Matrix> targets_norm;
    if (!classify) {
        targets_norm.reserve(training.size());
        for (const auto& s : training) {
            Matrix t = s.pred_targets;
            if (net.normalized_targets)
                for (int r = 0; r < t.rows; ++r)
                    for (int c = 0; c < t.cols; ++c) t(r, c) = net.norm.normalize(t(r, c), c);
            targets_norm.push_back(std::move(t));
        }
    }

    AdamState adam;
    std::mt19937_64 shuffle_rng(config.schedule.shuffle_seed);
    std::vector<size_t> order(training.size());
    std::iota(order.begin(), order.end(), 0);

    for (int era = 0; era < config.schedule.eras; ++era) {
        const double lr = config.schedule.base_lr * std::pow(config.schedule.era_decay, era);
        for (int ep = 0; ep < config.schedule.epochs_per_era; ++ep) {
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            double epoch_loss = 0.0;
            double epoch_sq_err = 0.0;
            long long correct = 0, total = 0, err_count = 0;
            int batches = 0;

            for (size_t start = 0; start < order.size(); start += config.schedule.batch_size) {
                const size_t stop = std::min(order.size(), start + config.schedule.batch_size);
                Gradients acc = Gradients::zeros_like(net);
                double batch_loss = 0.0;

                for (size_t k = start; k < stop; ++k) {
                    const Sample& s = training[order[k]];
                    const auto* valid = s.valid.empty() ? nullptr : &s.valid;
                    ForwardCache cache;
                    const Matrix out = forward(net, s.inputs, &cache);
                    Matrix dz;
                    if (classify) {
                        batch_loss +=
                            loss_weighted_cross_entropy(out, s.class_targets, config.p_r, valid);
                        dz = grad_weighted_cross_entropy(out, s.class_targets, config.p_r, valid);
                        for (int t = 0; t < out.rows; ++t) {
                            if (valid && !(*valid)[t]) continue;
                            const int label = out(t, 1) > out(t, 0) ? 1 : 0;
                            correct += label == s.class_targets[t];
                            ++total;
                        }
                    } else {
                        const Matrix& targ = targets_norm[order[k]];
                        const MseResult r = loss_mse(out, targ, valid);
                        batch_loss += r.mse;
                        dz = grad_mse(out, targ, valid);
                        for (int t = 0; t < out.rows; ++t) {
                            if (valid && !(*valid)[t]) continue;
                            for (int o = 0; o < out.cols; ++o) {
                                const double d = out(t, o) - targ(t, o);
                                epoch_sq_err += d * d;
                                ++err_count;
                            }
                        }
                    }
                    const Gradients g = backward(net, cache, dz);
                    size_t i = 0;
                    std::vector<double*> dst;
                    dst.reserve(param_count(net.lstm, net.head));
                    visit_params(acc.lstm, acc.head, [&dst](double& p) { dst.push_back(&p); });
                    visit_params(const_cast<LstmParams&>(g.lstm), const_cast<HeadParams&>(g.head),
                                 [&](double& p) { *dst[i++] += p; });
                }

                const double inv = 1.0 / static_cast<double>(stop - start);
                visit_params(acc.lstm, acc.head, [inv](double& p) { p *= inv; });
                batch_loss *= inv;
                if (!std::isfinite(batch_loss))
                    throw std::runtime_error("training diverged: non-finite loss at era " +
                                             std::to_string(era));
                clip_gradients(acc, config.grad_clip);
                adam_step(adam, net, acc, lr);
                epoch_loss += batch_loss;
                ++batches;
            }

            if (trace) {
                EpochStats st;
                st.epoch = era * config.schedule.epochs_per_era + ep;
                st.lr = lr;
                st.loss = batches ? epoch_loss / batches : 0.0;
                st.metric = classify
                                ? (total ? static_cast<double>(correct) / total : 0.0)
                                : (err_count ? std::sqrt(epoch_sq_err / err_count) : 0.0);
                trace->push_back(st);
            }
        }
    }
    return net;
}

std::vector<std::pair<int, double>> classify_with_confidence(const Network& net,
                                                             const Matrix& inputs) {
    if (net.head.mode != HeadMode::Classify)
        throw std::invalid_argument("network is not a classifier");
    const Matrix probs = forward(net, inputs);
    std::vector<std::pair<int, double>> out(probs.rows);
    for (int t = 0; t < probs.rows; ++t) {
        const double p1 = probs(t, 1);
        out[t] = {p1 > probs(t, 0) ? 1 : 0, 2.0 * p1 - 1.0};
    }
    return out;
}

Matrix predict(const Network& net, const Matrix& inputs) {
    if (net.head.mode != HeadMode::Predict)
        throw std::invalid_argument("network is not a predictor");
    Matrix out = forward(net, inputs);
    if (net.normalized_targets)
        for (int t = 0; t < out.rows; ++t)
            for (int o = 0; o < out.cols; ++o) out(t, o) = net.norm.denormalize(out(t, o), o);
    return out;
}

AccuracyMetrics accuracy_metrics(const std::vector<int>& predictions,
                                 const std::vector<int>& targets, double p_r) {
    if (predictions.size() != targets.size()) throw std::invalid_argument("length mismatch");
    long long correct = 0;
    double wnum = 0.0, wden = 0.0;
    for (size_t i = 0; i < targets.size(); ++i) {
        const double w = targets[i] ? 1.0 - p_r : p_r;
        wden += w;
        if (predictions[i] == targets[i]) {
            ++correct;
            wnum += w;
        }
    }
    AccuracyMetrics m;
    m.accuracy = targets.empty() ? 0.0 : static_cast<double>(correct) / targets.size();
    m.weighted_accuracy = wden > 0.0 ? wnum / wden : 0.0;
    return m;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.a}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
    m.a = j.at("data").get<std::vector<double>>();
    if (m.a.size() != static_cast<size_t>(m.rows) * m.cols)
        throw std::runtime_error("corrupt matrix in model file");
    return m;
}

}  // namespace

void save_network(const std::string& path, const Network& net) {
    nlohmann::json j;
    j["version"] = net.version;
    j["n_in"] = net.lstm.n_in;
    j["n_hid"] = net.lstm.n_hid;
    j["n_out"] = net.head.n_out();
    j["mode"] = net.head.mode == HeadMode::Classify ? "classify" : "predict";
    j["normalized_targets"] = net.normalized_targets;
    for (int g = 0; g < 4; ++g) {
        const std::string k(1, "fico"[g]);
        j["lstm"]["W_" + k] = matrix_to_json(net.lstm.W[g]);
        j["lstm"]["R_" + k] = matrix_to_json(net.lstm.R[g]);
        j["lstm"]["b_" + k] = net.lstm.b[g];
    }
    j["head"]["w"] = matrix_to_json(net.head.w);
    j["head"]["b"] = net.head.b;
    j["norm"]["mu"] = net.norm.mu;
    j["norm"]["sigma"] = net.norm.sigma;
    j["metadata"] = net.metadata;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << j.dump(1) << '\n';
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;

    Network net;
    net.version = j.at("version").get<int>();
    const int n_in = j.at("n_in").get<int>();
    const int n_hid = j.at("n_hid").get<int>();
    const int n_out = j.at("n_out").get<int>();
    const HeadMode mode =
        j.at("mode").get<std::string>() == "classify" ? HeadMode::Classify : HeadMode::Predict;
    net.lstm = LstmParams::zeros(n_in, n_hid);
    net.head = HeadParams::zeros(mode, n_hid, n_out);
    net.normalized_targets = j.value("normalized_targets", false);
    for (int g = 0; g < 4; ++g) {
        const std::string k(1, "fico"[g]);
        net.lstm.W[g] = matrix_from_json(j.at("lstm").at("W_" + k));
        net.lstm.R[g] = matrix_from_json(j.at("lstm").at("R_" + k));
        net.lstm.b[g] = j.at("lstm").at("b_" + k).get<Vec>();
    }
    net.head.w = matrix_from_json(j.at("head").at("w"));
    net.head.b = j.at("head").at("b").get<Vec>();
    net.norm.mu = j.at("norm").at("mu").get<Vec>();
    net.norm.sigma = j.at("norm").at("sigma").get<Vec>();
    if (j.contains("metadata"))
        net.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    return net;
}

}  // namespace trafcast
