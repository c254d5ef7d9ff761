#include "klent/approx.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "klent/rng.hpp"

namespace klent::approx {

namespace {

constexpr char kMagic[8] = {'K', 'L', 'E', 'N', 'T', 'C', 'P', '1'};
constexpr uint32_t kVersion = 1;

struct MlpSlices {
  // offsets into theta; layer l maps width[l] -> width[l+1]
  std::vector<size_t> w_off, b_off;
  std::vector<int> width;  // feature_count, hidden..., then heads appended
  size_t policy_w = 0, policy_b = 0, q_w = 0, q_b = 0;
  int trunk_out = 0;
};

MlpSlices slices_of(const Layout& layout) {
  MlpSlices s;
  s.width.push_back(layout.feature_count);
  for (int h : layout.hidden) s.width.push_back(h);
  size_t off = 0;
  for (size_t l = 0; l + 1 < s.width.size(); ++l) {
    s.w_off.push_back(off);
    off += static_cast<size_t>(s.width[l + 1]) * static_cast<size_t>(s.width[l]);
    s.b_off.push_back(off);
    off += static_cast<size_t>(s.width[l + 1]);
  }
  s.trunk_out = s.width.back();
  const size_t head = static_cast<size_t>(layout.action_count) * static_cast<size_t>(s.trunk_out);
  s.policy_w = off;
  off += head;
  s.policy_b = off;
  off += static_cast<size_t>(layout.action_count);
  s.q_w = off;
  off += head;
  s.q_b = off;
  off += static_cast<size_t>(layout.action_count);
  return s;
}

// y = W x + b, W row-major (rows x cols)
void affine(const double* w, const double* b, const double* x, double* y, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* wr = w + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

struct MlpTrace {
  std::vector<std::vector<double>> pre;   // pre-activations per trunk layer
  std::vector<std::vector<double>> post;  // post[0] = input features
  std::vector<double> policy_logits;
  std::vector<double> q;
};

MlpTrace mlp_forward(const Parameters& params, const std::vector<double>& features) {
  const auto s = slices_of(params.layout);
  MlpTrace t;
  t.post.push_back(features);
  for (size_t l = 0; l + 1 < s.width.size(); ++l) {
    const int rows = s.width[l + 1], cols = s.width[l];
    std::vector<double> z(static_cast<size_t>(rows));
    affine(params.theta.data() + s.w_off[l], params.theta.data() + s.b_off[l],
           t.post.back().data(), z.data(), rows, cols);
    std::vector<double> x(static_cast<size_t>(rows));
    for (int i = 0; i < rows; ++i) x[static_cast<size_t>(i)] = z[static_cast<size_t>(i)] > 0.0 ? z[static_cast<size_t>(i)] : 0.0;
    t.pre.push_back(std::move(z));
    t.post.push_back(std::move(x));
  }
  const int actions = params.layout.action_count;
  t.policy_logits.assign(static_cast<size_t>(actions), 0.0);
  t.q.assign(static_cast<size_t>(actions), 0.0);
  affine(params.theta.data() + s.policy_w, params.theta.data() + s.policy_b,
         t.post.back().data(), t.policy_logits.data(), actions, s.trunk_out);
  affine(params.theta.data() + s.q_w, params.theta.data() + s.q_b, t.post.back().data(),
         t.q.data(), actions, s.trunk_out);
  return t;
}

// log softmax over legal actions; illegal entries left untouched
void masked_log_softmax(const std::vector<double>& logits, const games::LegalMask& mask,
                        std::vector<double>& out) {
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int a : mask.legal) max_logit = std::max(max_logit, logits[static_cast<size_t>(a)]);
  double z = 0.0;
  for (int a : mask.legal) z += std::exp(logits[static_cast<size_t>(a)] - max_logit);
  const double log_z = std::log(z);
  for (int a : mask.legal) out[static_cast<size_t>(a)] = logits[static_cast<size_t>(a)] - max_logit - log_z;
}

double record_loss(const std::vector<double>& policy_logits, const std::vector<double>& q,
                   const SampleRecord& rec) {
  std::vector<double> logp(policy_logits.size(), 0.0);
  masked_log_softmax(policy_logits, rec.mask, logp);
  double ce = 0.0;
  for (int a : rec.mask.legal) {
    const double target = rec.target_policy.probs[static_cast<size_t>(a)];
    if (target > 0.0) ce -= target * logp[static_cast<size_t>(a)];
  }
  const double dv = q[static_cast<size_t>(rec.action)] - rec.g_lambda;
  return ce + dv * dv;
}

// d(loss_record)/d(policy_logits) and /d(q): softmax minus target on legal
// entries, 2*(q - g) on the taken action.
void head_grads(const std::vector<double>& policy_logits, const std::vector<double>& q,
                const SampleRecord& rec, std::vector<double>& d_logits, std::vector<double>& d_q) {
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int a : rec.mask.legal) max_logit = std::max(max_logit, policy_logits[static_cast<size_t>(a)]);
  double z = 0.0;
  for (int a : rec.mask.legal) z += std::exp(policy_logits[static_cast<size_t>(a)] - max_logit);
  for (int a : rec.mask.legal) {
    const double p = std::exp(policy_logits[static_cast<size_t>(a)] - max_logit) / z;
    d_logits[static_cast<size_t>(a)] = p - rec.target_policy.probs[static_cast<size_t>(a)];
  }
  d_q[static_cast<size_t>(rec.action)] = 2.0 * (q[static_cast<size_t>(rec.action)] - rec.g_lambda);
}

void check_batch(const Parameters& params, TrainBatch batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  for (const auto& rec : batch) {
    if (static_cast<int>(rec.target_policy.probs.size()) != params.layout.action_count)
      throw std::invalid_argument("sample target policy has wrong action count");
    if (!rec.mask.is_legal(rec.action)) throw std::invalid_argument("sample action is illegal");
  }
}

}  // namespace

const char* to_string(Backend b) { return b == Backend::tabular ? "tabular" : "mlp"; }

Backend backend_from_string(const std::string& name) {
  if (name == "tabular") return Backend::tabular;
  if (name == "mlp") return Backend::mlp;
  throw std::invalid_argument("unknown backend: " + name);
}

size_t Layout::theta_size_mlp() const {
  const auto s = slices_of(*this);
  return s.q_b + static_cast<size_t>(action_count);
}

Parameters make_tabular(int action_count, int feature_count) {
  Parameters p;
  p.layout.backend = Backend::tabular;
  p.layout.action_count = action_count;
  p.layout.feature_count = feature_count;
  return p;
}

Parameters make_mlp(int action_count, int feature_count, const std::vector<int>& hidden,
                    uint64_t seed) {
  if (hidden.empty()) throw std::invalid_argument("mlp needs at least one hidden layer");
  Parameters p;
  p.layout.backend = Backend::mlp;
  p.layout.action_count = action_count;
  p.layout.feature_count = feature_count;
  p.layout.hidden = hidden;
  p.theta.assign(p.layout.theta_size_mlp(), 0.0);

  // fan-in scaled uniform weights, zero biases
  Rng rng(seed);
  const auto s = slices_of(p.layout);
  for (size_t l = 0; l + 1 < s.width.size(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.width[l]));
    const size_t count = static_cast<size_t>(s.width[l + 1]) * static_cast<size_t>(s.width[l]);
    for (size_t i = 0; i < count; ++i) p.theta[s.w_off[l] + i] = rng.uniform_in(-scale, scale);
  }
  const double head_scale = 1.0 / std::sqrt(static_cast<double>(s.trunk_out));
  const size_t head_count = static_cast<size_t>(p.layout.action_count) * static_cast<size_t>(s.trunk_out);
  for (size_t i = 0; i < head_count; ++i) p.theta[s.policy_w + i] = rng.uniform_in(-head_scale, head_scale);
  for (size_t i = 0; i < head_count; ++i) p.theta[s.q_w + i] = rng.uniform_in(-head_scale, head_scale);
  return p;
}

NetOutput forward(const Parameters& params, const StateInput& input) {
  const int actions = params.layout.action_count;
  if (static_cast<int>(input.mask.bits.size()) != actions)
    throw std::invalid_argument("mask size does not match action count");
  NetOutput out;
  out.q.mask = input.mask;
  if (params.layout.backend == Backend::tabular) {
    out.policy_logits.assign(static_cast<size_t>(actions), 0.0);
    out.q.q.assign(static_cast<size_t>(actions), 0.0);
    const auto it = params.table_index.find(input.key);
    if (it != params.table_index.end()) {
      const double* row = params.theta.data() + static_cast<size_t>(it->second) * params.row_width();
      for (int a = 0; a < actions; ++a) {
        out.policy_logits[static_cast<size_t>(a)] = row[a];
        out.q.q[static_cast<size_t>(a)] = row[actions + a];
      }
    }
    return out;
  }
  if (static_cast<int>(input.features.size()) != params.layout.feature_count)
    throw std::invalid_argument("feature size does not match layout");
  auto trace = mlp_forward(params, input.features);
  out.policy_logits = std::move(trace.policy_logits);
  out.q.q = std::move(trace.q);
  return out;
}

int greedy_action(const Parameters& params, const StateInput& input) {
  const NetOutput out = forward(params, input);
  int best = input.mask.legal.at(0);
  for (int a : input.mask.legal) {
    if (out.policy_logits[static_cast<size_t>(a)] > out.policy_logits[static_cast<size_t>(best)]) best = a;
  }
  return best;
}

double loss(const Parameters& params, TrainBatch batch) {
  check_batch(params, batch);
  double total = 0.0;
  size_t index = 0;
  for (const auto& rec : batch) {
    const NetOutput out = forward(params, {rec.state_key, rec.features, rec.mask});
    const double l = record_loss(out.policy_logits, out.q.q, rec);
    if (!std::isfinite(l)) {
      throw std::runtime_error("non-finite loss at batch index " + std::to_string(index));
    }
    total += l;
    ++index;
  }
  return total / static_cast<double>(batch.size());
}

std::vector<double> gradient(const Parameters& params, TrainBatch batch) {
  check_batch(params, batch);
  const int actions = params.layout.action_count;
  std::vector<double> grad(params.theta.size(), 0.0);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  if (params.layout.backend == Backend::tabular) {
    for (const auto& rec : batch) {
      const auto it = params.table_index.find(rec.state_key);
      if (it == params.table_index.end()) continue;  // unseen row: loss constant in theta
      const size_t base = static_cast<size_t>(it->second) * params.row_width();
      std::vector<double> logits(static_cast<size_t>(actions)), q(static_cast<size_t>(actions));
      for (int a = 0; a < actions; ++a) {
        logits[static_cast<size_t>(a)] = params.theta[base + static_cast<size_t>(a)];
        q[static_cast<size_t>(a)] = params.theta[base + static_cast<size_t>(actions + a)];
      }
      std::vector<double> dl(static_cast<size_t>(actions), 0.0), dq(static_cast<size_t>(actions), 0.0);
      head_grads(logits, q, rec, dl, dq);
      for (int a = 0; a < actions; ++a) {
        grad[base + static_cast<size_t>(a)] += inv_batch * dl[static_cast<size_t>(a)];
        grad[base + static_cast<size_t>(actions + a)] += inv_batch * dq[static_cast<size_t>(a)];
      }
    }
    return grad;
  }

  const auto s = slices_of(params.layout);
  for (const auto& rec : batch) {
    const auto trace = mlp_forward(params, rec.features);
    std::vector<double> dl(static_cast<size_t>(actions), 0.0), dq(static_cast<size_t>(actions), 0.0);
    head_grads(trace.policy_logits, trace.q, rec, dl, dq);

    // heads
    const auto& h = trace.post.back();
    std::vector<double> dh(static_cast<size_t>(s.trunk_out), 0.0);
    for (int a = 0; a < actions; ++a) {
      const double ga = dl[static_cast<size_t>(a)] * inv_batch;
      const double gq = dq[static_cast<size_t>(a)] * inv_batch;
      if (ga != 0.0) {
        double* wrow = grad.data() + s.policy_w + static_cast<size_t>(a) * s.trunk_out;
        const double* prow = params.theta.data() + s.policy_w + static_cast<size_t>(a) * s.trunk_out;
        for (int i = 0; i < s.trunk_out; ++i) {
          wrow[i] += ga * h[static_cast<size_t>(i)];
          dh[static_cast<size_t>(i)] += prow[i] * ga;
        }
        grad[s.policy_b + static_cast<size_t>(a)] += ga;
      }
      if (gq != 0.0) {
        double* wrow = grad.data() + s.q_w + static_cast<size_t>(a) * s.trunk_out;
        const double* prow = params.theta.data() + s.q_w + static_cast<size_t>(a) * s.trunk_out;
        for (int i = 0; i < s.trunk_out; ++i) {
          wrow[i] += gq * h[static_cast<size_t>(i)];
          dh[static_cast<size_t>(i)] += prow[i] * gq;
        }
        grad[s.q_b + static_cast<size_t>(a)] += gq;
      }
    }

    // trunk, back to front
    std::vector<double> dx = std::move(dh);
    for (size_t l = s.w_off.size(); l-- > 0;) {
      const int rows = s.width[l + 1], cols = s.width[l];
      const auto& z = trace.pre[l];
      const auto& x_in = trace.post[l];
      std::vector<double> dz(static_cast<size_t>(rows));
      for (int r = 0; r < rows; ++r)
        dz[static_cast<size_t>(r)] = z[static_cast<size_t>(r)] > 0.0 ? dx[static_cast<size_t>(r)] : 0.0;
      std::vector<double> dx_prev(static_cast<size_t>(cols), 0.0);
      for (int r = 0; r < rows; ++r) {
        const double g = dz[static_cast<size_t>(r)];
        if (g == 0.0) continue;
        double* wrow = grad.data() + s.w_off[l] + static_cast<size_t>(r) * cols;
        const double* prow = params.theta.data() + s.w_off[l] + static_cast<size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) {
          wrow[c] += g * x_in[static_cast<size_t>(c)];
          dx_prev[static_cast<size_t>(c)] += prow[c] * g;
        }
        grad[s.b_off[l] + static_cast<size_t>(r)] += g;
      }
      dx = std::move(dx_prev);
    }
  }
  return grad;
}

void ensure_rows(Parameters& params, TrainBatch batch) {
  if (params.layout.backend != Backend::tabular) return;
  for (const auto& rec : batch) {
    if (params.table_index.count(rec.state_key)) continue;
    const int row = static_cast<int>(params.table_keys.size());
    params.table_keys.push_back(rec.state_key);
    params.table_index.emplace(rec.state_key, row);
    params.theta.resize(params.theta.size() + static_cast<size_t>(params.row_width()), 0.0);
  }
}

void OptimizerState::ensure_size(size_t n) {
  if (m.size() < n) m.resize(n, 0.0);
  if (v.size() < n) v.resize(n, 0.0);
}

void optimizer_step(Parameters& params, const std::vector<double>& grad, OptimizerState& opt) {
  if (grad.size() != params.theta.size())
    throw std::invalid_argument("gradient size does not match parameters");
  opt.ensure_size(params.theta.size());
  opt.step += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (size_t i = 0; i < grad.size(); ++i) {
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * grad[i];
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
    const double m_hat = opt.m[i] / bc1;
    const double v_hat = opt.v[i] / bc2;
    params.theta[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.epsilon);
  }
}

// ---------------------------------------------------------------------------
// checkpoint io
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
  put<uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& is) {
  const uint64_t n = get<uint64_t>(is);
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  put<uint32_t>(os, kVersion);
  put<uint8_t>(os, ckpt.params.layout.backend == Backend::tabular ? 0 : 1);
  put<int32_t>(os, ckpt.params.layout.action_count);
  put<int32_t>(os, ckpt.params.layout.feature_count);
  put<uint32_t>(os, static_cast<uint32_t>(ckpt.params.layout.hidden.size()));
  for (int h : ckpt.params.layout.hidden) put<int32_t>(os, h);
  put<uint64_t>(os, ckpt.iteration);
  put<uint64_t>(os, ckpt.sim_evals);
  put<uint64_t>(os, ckpt.config_hash);
  put<uint64_t>(os, ckpt.params.table_keys.size());
  for (const auto& key : ckpt.params.table_keys) {
    put<uint32_t>(os, static_cast<uint32_t>(key.size()));
    os.write(key.data(), static_cast<std::streamsize>(key.size()));
  }
  put_doubles(os, ckpt.params.theta);
  put<uint64_t>(os, ckpt.opt.step);
  put<double>(os, ckpt.opt.lr);
  put<double>(os, ckpt.opt.beta1);
  put<double>(os, ckpt.opt.beta2);
  put<double>(os, ckpt.opt.epsilon);
  put_doubles(os, ckpt.opt.m);
  put_doubles(os, ckpt.opt.v);
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  const uint32_t version = get<uint32_t>(is);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.params.layout.backend = get<uint8_t>(is) == 0 ? Backend::tabular : Backend::mlp;
  ckpt.params.layout.action_count = get<int32_t>(is);
  ckpt.params.layout.feature_count = get<int32_t>(is);
  const uint32_t hidden_count = get<uint32_t>(is);
  for (uint32_t i = 0; i < hidden_count; ++i) ckpt.params.layout.hidden.push_back(get<int32_t>(is));
  ckpt.iteration = get<uint64_t>(is);
  ckpt.sim_evals = get<uint64_t>(is);
  ckpt.config_hash = get<uint64_t>(is);
  const uint64_t key_count = get<uint64_t>(is);
  for (uint64_t i = 0; i < key_count; ++i) {
    const uint32_t len = get<uint32_t>(is);
    std::string key(len, '\0');
    is.read(key.data(), len);
    if (!is) throw std::runtime_error("checkpoint truncated");
    ckpt.params.table_index.emplace(key, static_cast<int>(i));
    ckpt.params.table_keys.push_back(std::move(key));
  }
  ckpt.params.theta = get_doubles(is);
  ckpt.opt.step = get<uint64_t>(is);
  ckpt.opt.lr = get<double>(is);
  ckpt.opt.beta1 = get<double>(is);
  ckpt.opt.beta2 = get<double>(is);
  ckpt.opt.epsilon = get<double>(is);
  ckpt.opt.m = get_doubles(is);
  ckpt.opt.v = get_doubles(is);
  return ckpt;
}

}  // namespace klent::approx
