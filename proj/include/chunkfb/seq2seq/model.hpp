#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "chunkfb/ad/ops.hpp"
#include "chunkfb/ad/tape.hpp"
#include "chunkfb/ad/tensor.hpp"
#include "chunkfb/random.hpp"
#include "chunkfb/seq2seq/config.hpp"

namespace chunkfb::seq2seq {

using ad::Index;
using ad::Tensor;
using ad::Var;

/// Decoder output for one source sentence.
struct Hypothesis {
  TokenSeq tokens;               // EOS excluded
  std::vector<double> log_probs;  // one per token, plus EOS when it was produced
  std::vector<std::vector<double>> attention;  // one row per entry of log_probs
  bool finished = false;          // EOS was produced

  double score() const {
    double s = 0;
    for (double lp : log_probs) s += lp;
    return s;
  }
  double normalized_score() const {
    return log_probs.empty() ? 0.0 : score() / static_cast<double>(log_probs.size());
  }
};

/// Attention encoder-decoder: bidirectional LSTM encoder, MLP attention and a
/// stacked LSTM decoder fed with the previous target embedding and the
/// attention context.
template <typename Scalar>
class Seq2Seq {
 public:
  using Mat = Tensor<Scalar>;

  explicit Seq2Seq(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    build_params();
    Rng rng(config_.seed);
    for (auto& p : params_.values) {
      for (Index i = 0; i < p.size(); ++i) {
        p.data()[i] = static_cast<Scalar>(rng.uniform(-config_.init_scale, config_.init_scale));
      }
    }
  }

  Seq2Seq(ModelConfig config, ad::ParamSet<Scalar> params) : config_(std::move(config)) {
    config_.validate();
    build_params();
    if (params.size() != params_.size()) {
      throw Error("model parameters: expected " + std::to_string(params_.size()) + " arrays, got " +
                  std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& src = params[params_.names[i]];
      auto& dst = params_.values[i];
      if (src.rows() != dst.rows() || src.cols() != dst.cols()) {
        throw Error("model parameter " + params_.names[i] + ": shape " + ad::shape_string(src) +
                    " does not match " + ad::shape_string(dst));
      }
      dst = src;
    }
  }

  const ModelConfig& config() const { return config_; }
  ad::ParamSet<Scalar>& params() { return params_; }
  const ad::ParamSet<Scalar>& params() const { return params_; }

  /// Parameters recorded on a tape, in ParamSet order.
  struct Bound {
    std::vector<Var<Scalar>> vars;
    const Var<Scalar>& operator[](std::size_t i) const { return vars[i]; }
  };

  Bound bind(ad::Tape<Scalar>& tape, bool trainable) const {
    Bound b;
    b.vars.reserve(params_.size());
    for (const auto& p : params_.values) b.vars.push_back(trainable ? tape.variable(p) : tape.constant(p));
    return b;
  }

  struct Encoded {
    Var<Scalar> memory;      // J*B x 2H, row j*B + b
    Var<Scalar> projected;   // memory times the attention key matrix
    Mat score_mask;          // B x J, 0 on real positions and a large negative on padding
    std::vector<Var<Scalar>> h, c;  // initial decoder state per layer
    Index batch = 0;
    Index length = 0;
  };

  struct State {
    std::vector<Var<Scalar>> h, c;
  };

  struct Step {
    Var<Scalar> logits;     // B x V
    Var<Scalar> attention;  // B x J
    State state;
  };

  /// Encodes a batch of sources. `dropout_rng` enables input dropout.
  Encoded encode_batch(ad::Tape<Scalar>& tape, const Bound& p, std::span<const TokenSeq> sources,
                       Rng* dropout_rng) const {
    const Index B = static_cast<Index>(sources.size());
    Index J = 0;
    for (const auto& s : sources) {
      if (s.empty()) throw Error("encode: empty source sentence");
      J = std::max<Index>(J, static_cast<Index>(s.size()));
      for (auto id : s) {
        if (id < 0 || id >= config_.src_vocab_size) {
          throw Error("encode: source token id " + std::to_string(id) + " out of range");
        }
      }
    }
    const Index H = config_.encoder_hidden;

    std::vector<std::vector<int>> ids(static_cast<std::size_t>(J), std::vector<int>(static_cast<std::size_t>(B), text::kPad));
    std::vector<Mat> masks(static_cast<std::size_t>(J), Mat::Zero(B, 1));
    for (Index b = 0; b < B; ++b) {
      const auto& s = sources[static_cast<std::size_t>(b)];
      for (std::size_t j = 0; j < s.size(); ++j) {
        ids[j][static_cast<std::size_t>(b)] = s[j];
        masks[j](b, 0) = Scalar(1);
      }
    }

    std::vector<Var<Scalar>> inputs;
    inputs.reserve(static_cast<std::size_t>(J));
    for (Index j = 0; j < J; ++j) {
      inputs.push_back(input_dropout(ad::embedding_lookup(p[kSrcEmbed], std::span<const int>(ids[static_cast<std::size_t>(j)])),
                                     dropout_rng));
    }

    const Var<Scalar> zero = tape.constant(Mat::Zero(B, H));
    std::vector<Var<Scalar>> fwd(static_cast<std::size_t>(J)), bwd(static_cast<std::size_t>(J));
    Var<Scalar> h = zero, c = zero;
    for (Index j = 0; j < J; ++j) {
      auto [h2, c2] = lstm_cell(inputs[static_cast<std::size_t>(j)], h, c, p[kEncFwdW], p[kEncFwdB]);
      h = ad::blend(masks[static_cast<std::size_t>(j)], h2, h);
      c = ad::blend(masks[static_cast<std::size_t>(j)], c2, c);
      fwd[static_cast<std::size_t>(j)] = h;
    }
    const Var<Scalar> fwd_final = h;
    h = zero;
    c = zero;
    for (Index j = J; j-- > 0;) {
      auto [h2, c2] = lstm_cell(inputs[static_cast<std::size_t>(j)], h, c, p[kEncBwdW], p[kEncBwdB]);
      h = ad::blend(masks[static_cast<std::size_t>(j)], h2, h);
      c = ad::blend(masks[static_cast<std::size_t>(j)], c2, c);
      bwd[static_cast<std::size_t>(j)] = h;
    }
    const Var<Scalar> bwd_final = h;

    std::vector<Var<Scalar>> rows;
    rows.reserve(static_cast<std::size_t>(J));
    for (Index j = 0; j < J; ++j) rows.push_back(ad::concat(fwd[static_cast<std::size_t>(j)], bwd[static_cast<std::size_t>(j)], 1));

    Encoded e;
    e.batch = B;
    e.length = J;
    e.memory = ad::concat(rows, 0);
    e.projected = ad::matmul(e.memory, p[kAttMem]);
    e.score_mask = Mat::Zero(B, J);
    for (Index b = 0; b < B; ++b) {
      for (Index j = static_cast<Index>(sources[static_cast<std::size_t>(b)].size()); j < J; ++j) {
        e.score_mask(b, j) = kMaskValue;
      }
    }
    const Var<Scalar> init =
        ad::tanh(ad::add_row(ad::matmul(ad::concat(fwd_final, bwd_final, 1), p[kBridgeW]), p[kBridgeB]));
    const Var<Scalar> zero_dec = tape.constant(Mat::Zero(B, config_.decoder_hidden));
    for (int l = 0; l < config_.decoder_layers; ++l) {
      e.h.push_back(init);
      e.c.push_back(zero_dec);
    }
    return e;
  }

  /// One decoder step from the previous target tokens.
  Step decode_step(const Bound& p, const Encoded& enc, const State& state, std::span<const int> prev,
                   Rng* dropout_rng) const {
    const Var<Scalar> emb = input_dropout(ad::embedding_lookup(p[kTgtEmbed], prev), dropout_rng);
    const Var<Scalar>& query = state.h.back();

    const Var<Scalar> keys = ad::add_row(
        ad::add(enc.projected, ad::tile_rows(ad::matmul(query, p[kAttQuery]), enc.length)), p[kAttB]);
    const Var<Scalar> energies = ad::matmul(ad::tanh(keys), p[kAttV]);  // J*B x 1
    const Var<Scalar> scores = ad::transpose(ad::reshape(energies, enc.length, enc.batch));
    const Var<Scalar> alpha = ad::softmax(ad::add_const(scores, enc.score_mask), 1);
    const Var<Scalar> context = ad::attend(alpha, enc.memory);

    Step out;
    Var<Scalar> x = ad::concat(emb, context, 1);
    for (int l = 0; l < config_.decoder_layers; ++l) {
      auto [h2, c2] = lstm_cell(x, state.h[static_cast<std::size_t>(l)], state.c[static_cast<std::size_t>(l)],
                                p[dec_w(l)], p[dec_w(l) + 1]);
      out.state.h.push_back(h2);
      out.state.c.push_back(c2);
      x = h2;
    }
    out.logits = ad::add_row(ad::matmul(ad::concat(x, context, 1), p[kOutW]), p[kOutB]);
    out.attention = alpha;
    return out;
  }

  State initial_state(const Encoded& enc) const { return State{enc.h, enc.c}; }

  struct Loss {
    Var<Scalar> total;                 // sum of weighted sentence losses
    std::vector<Var<Scalar>> logits;   // per decoder step, B x V
  };

  /// Teacher-forced weighted negative log-likelihood summed over the batch.
  Loss batch_loss(ad::Tape<Scalar>& tape, const Bound& p, std::span<const WeightedExample> batch,
                  Rng* dropout_rng) const {
    std::vector<TokenSeq> sources;
    sources.reserve(batch.size());
    Index T = 0;
    for (const auto& ex : batch) {
      if (ex.target.empty()) throw Error("loss: empty target sentence");
      if (ex.weights.size() != ex.target.size() + 1) {
        throw Error("loss: " + std::to_string(ex.weights.size()) + " weights for " +
                    std::to_string(ex.target.size()) + " target tokens plus EOS");
      }
      for (auto id : ex.target) {
        if (id < 0 || id >= config_.tgt_vocab_size) {
          throw Error("loss: target token id " + std::to_string(id) + " out of range");
        }
      }
      sources.push_back(ex.source);
      T = std::max<Index>(T, static_cast<Index>(ex.target.size()) + 1);
    }
    const Encoded enc = encode_batch(tape, p, sources, dropout_rng);
    State state = initial_state(enc);

    const std::size_t B = batch.size();
    Loss loss;
    std::vector<Var<Scalar>> terms;
    std::vector<int> prev(B, text::kBos), targets(B);
    std::vector<Scalar> weights(B);
    for (Index i = 0; i < T; ++i) {
      for (std::size_t b = 0; b < B; ++b) {
        const auto& ex = batch[b];
        const auto n = static_cast<Index>(ex.target.size());
        targets[b] = i < n ? ex.target[static_cast<std::size_t>(i)] : (i == n ? text::kEos : text::kPad);
        weights[b] = i <= n ? static_cast<Scalar>(ex.weights[static_cast<std::size_t>(i)]) : Scalar(0);
      }
      Step step = decode_step(p, enc, state, prev, dropout_rng);
      loss.logits.push_back(step.logits);
      terms.push_back(ad::weighted_nll(step.logits, std::span<const int>(targets), std::span<const Scalar>(weights)));
      state = std::move(step.state);
      prev = targets;
    }
    loss.total = terms.size() == 1 ? terms.front() : ad::sum(ad::concat(terms, 1));
    return loss;
  }

  /// Loss of one example without dropout.
  double example_loss(const WeightedExample& ex) const {
    ad::Tape<Scalar> tape;
    const Bound p = bind(tape, false);
    return static_cast<double>(batch_loss(tape, p, std::span<const WeightedExample>(&ex, 1), nullptr).total.value()(0, 0));
  }

  /// -sum_i log p(e_i | e_<i, f), EOS included.
  double loss_mle(const text::SentencePair& pair) const { return example_loss(example_from_pair(pair)); }

  /// -sum_i w_i log p(e~_i | e~_<i, f); EOS weighted like the last token.
  double loss_pf(const feedback::FeedbackRecord& record) const {
    return example_loss(example_from_feedback(record));
  }

  /// Annotation vectors of one source sentence, J x 2H.
  Mat encode(const TokenSeq& source) const {
    ad::Tape<Scalar> tape;
    const Bound p = bind(tape, false);
    const std::vector<TokenSeq> one{source};
    return encode_batch(tape, p, one, nullptr).memory.value();
  }

  /// Greedy decoding of a batch; each sentence stops at EOS or max_len tokens.
  std::vector<Hypothesis> decode_greedy(std::span<const TokenSeq> sources, std::span<const int> max_lens) const {
    ad::Tape<Scalar> tape;
    const Bound p = bind(tape, false);
    const Encoded enc = encode_batch(tape, p, sources, nullptr);
    State state = initial_state(enc);
    const std::size_t B = sources.size();
    std::vector<Hypothesis> hyps(B);
    std::vector<bool> done(B, false);
    std::vector<int> prev(B, text::kBos);
    int limit = 0;
    for (std::size_t b = 0; b < B; ++b) {
      if (max_lens[b] < 1) throw Error("decode: max_len must be >= 1");
      limit = std::max(limit, max_lens[b]);
    }
    for (int i = 0; i < limit; ++i) {
      Step step = decode_step(p, enc, state, prev, nullptr);
      const Mat& z = step.logits.value();
      const Mat& a = step.attention.value();
      bool all_done = true;
      for (std::size_t b = 0; b < B; ++b) {
        if (done[b]) {
          prev[b] = text::kPad;
          continue;
        }
        const auto row = static_cast<Index>(b);
        const Index best = argmax_token(z, row);
        const double lp = log_softmax_at(z, row, best);
        hyps[b].log_probs.push_back(lp);
        hyps[b].attention.push_back(attention_row(a, row, sources[b].size()));
        if (best == text::kEos) {
          hyps[b].finished = true;
          done[b] = true;
        } else {
          hyps[b].tokens.push_back(static_cast<text::TokenId>(best));
          if (static_cast<int>(hyps[b].tokens.size()) >= max_lens[b]) done[b] = true;
        }
        prev[b] = static_cast<int>(best);
        all_done = all_done && done[b];
      }
      state = std::move(step.state);
      if (all_done) break;
      // Finished rows keep running; their outputs are ignored.
    }
    return hyps;
  }

  Hypothesis decode_greedy(const TokenSeq& source, int max_len) const {
    const std::vector<TokenSeq> one{source};
    const std::vector<int> lens{max_len};
    return decode_greedy(one, lens).front();
  }

  /// Beam search; returns the completed hypothesis with the best
  /// length-normalized log-probability (or the best partial one when none
  /// finishes within max_len tokens).
  Hypothesis decode_beam(const TokenSeq& source, int beam, int max_len) const {
    if (beam < 1) throw Error("decode_beam: beam must be >= 1");
    if (max_len < 1) throw Error("decode: max_len must be >= 1");
    ad::Tape<Scalar> tape;
    const Bound p = bind(tape, false);
    const std::vector<TokenSeq> one{source};
    const Encoded single = encode_batch(tape, p, one, nullptr);

    struct Item {
      Hypothesis hyp;
      std::size_t parent = 0;
    };
    std::vector<Item> alive{Item{}};
    std::vector<Hypothesis> finished;
    State state = initial_state(single);

    while (!alive.empty()) {
      const Index K = static_cast<Index>(alive.size());
      const Encoded enc = replicate(tape, single, K);
      std::vector<int> prev;
      for (const auto& it : alive) prev.push_back(it.hyp.tokens.empty() ? text::kBos : it.hyp.tokens.back());
      Step step = decode_step(p, enc, state, prev, nullptr);
      const Mat& z = step.logits.value();
      const Mat& a = step.attention.value();

      struct Cand {
        double score;
        std::size_t parent;
        Index token;
        double lp;
      };
      std::vector<Cand> cands;
      for (Index k = 0; k < K; ++k) {
        const Scalar mx = z.row(k).maxCoeff();
        const double lse = static_cast<double>(mx) + std::log(static_cast<double>((z.row(k).array() - mx).exp().sum()));
        const double base = alive[static_cast<std::size_t>(k)].hyp.score();
        for (Index v = text::kEos; v < z.cols(); ++v) {
          const double lp = static_cast<double>(z(k, v)) - lse;
          cands.push_back({base + lp, static_cast<std::size_t>(k), v, lp});
        }
      }
      std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.score > y.score; });

      std::vector<Item> next;
      std::vector<Index> rows;
      for (const auto& c : cands) {
        if (static_cast<int>(next.size()) + static_cast<int>(finished.size()) >= beam) break;
        Hypothesis h = alive[c.parent].hyp;
        h.log_probs.push_back(c.lp);
        h.attention.push_back(attention_row(a, static_cast<Index>(c.parent), source.size()));
        if (c.token == text::kEos) {
          h.finished = true;
          finished.push_back(std::move(h));
        } else if (static_cast<int>(h.tokens.size()) + 1 >= max_len) {
          // Out of length budget: kept as an unfinished candidate.
          h.tokens.push_back(static_cast<text::TokenId>(c.token));
          finished.push_back(std::move(h));
        } else {
          h.tokens.push_back(static_cast<text::TokenId>(c.token));
          next.push_back(Item{std::move(h), c.parent});
          rows.push_back(static_cast<Index>(c.parent));
        }
      }
      if (static_cast<int>(finished.size()) >= beam || next.empty()) {
        alive.clear();
        break;
      }
      state = select_rows(tape, step.state, rows);
      alive = std::move(next);
    }

    const auto better = [](const Hypothesis& x, const Hypothesis& y) {
      return x.normalized_score() > y.normalized_score();
    };
    if (!finished.empty()) {
      return *std::min_element(finished.begin(), finished.end(),
                               [&](const Hypothesis& x, const Hypothesis& y) { return better(x, y); });
    }
    Hypothesis best = alive.front().hyp;
    for (const auto& it : alive) {
      if (better(it.hyp, best)) best = it.hyp;
    }
    return best;
  }

  /// Fraction of target positions (EOS included) whose teacher-forced argmax
  /// equals the reference token.
  double token_accuracy(std::span<const WeightedExample> data) const {
    std::size_t right = 0, total = 0;
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < data.size(); start += kChunk) {
      const auto batch = data.subspan(start, std::min(kChunk, data.size() - start));
      ad::Tape<Scalar> tape;
      const Bound p = bind(tape, false);
      const Loss loss = batch_loss(tape, p, batch, nullptr);
      for (std::size_t i = 0; i < loss.logits.size(); ++i) {
        const Mat& z = loss.logits[i].value();
        for (std::size_t b = 0; b < batch.size(); ++b) {
          const auto& tgt = batch[b].target;
          if (i > tgt.size()) continue;
          const int want = i < tgt.size() ? tgt[i] : text::kEos;
          Index got = 0;
          z.row(static_cast<Index>(b)).maxCoeff(&got);
          right += got == want ? 1 : 0;
          ++total;
        }
      }
    }
    return total == 0 ? 0.0 : static_cast<double>(right) / static_cast<double>(total);
  }

  // Parameter slots in ParamSet order.
  static constexpr std::size_t kSrcEmbed = 0;
  static constexpr std::size_t kTgtEmbed = 1;
  static constexpr std::size_t kEncFwdW = 2;
  static constexpr std::size_t kEncFwdB = 3;
  static constexpr std::size_t kEncBwdW = 4;
  static constexpr std::size_t kEncBwdB = 5;
  static constexpr std::size_t kBridgeW = 6;
  static constexpr std::size_t kBridgeB = 7;
  static constexpr std::size_t kAttMem = 8;
  static constexpr std::size_t kAttQuery = 9;
  static constexpr std::size_t kAttB = 10;
  static constexpr std::size_t kAttV = 11;
  static constexpr std::size_t kOutW = 12;
  static constexpr std::size_t kOutB = 13;
  static constexpr std::size_t kFirstDecoder = 14;

  static std::size_t dec_w(int layer) { return kFirstDecoder + 2 * static_cast<std::size_t>(layer); }

 private:
  static constexpr Scalar kMaskValue = Scalar(-1e9);

  void build_params() {
    const Index E = config_.embedding_size, H = config_.encoder_hidden, D = config_.decoder_hidden,
                A = config_.attention_hidden, Vs = config_.src_vocab_size, Vt = config_.tgt_vocab_size;
    params_ = {};
    params_.add("src_embed", Mat::Zero(Vs, E));
    params_.add("tgt_embed", Mat::Zero(Vt, E));
    params_.add("enc.fwd.W", Mat::Zero(E + H, 4 * H));
    params_.add("enc.fwd.b", Mat::Zero(1, 4 * H));
    params_.add("enc.bwd.W", Mat::Zero(E + H, 4 * H));
    params_.add("enc.bwd.b", Mat::Zero(1, 4 * H));
    params_.add("bridge.W", Mat::Zero(2 * H, D));
    params_.add("bridge.b", Mat::Zero(1, D));
    params_.add("att.W_mem", Mat::Zero(2 * H, A));
    params_.add("att.W_query", Mat::Zero(D, A));
    params_.add("att.b", Mat::Zero(1, A));
    params_.add("att.v", Mat::Zero(A, 1));
    params_.add("out.W", Mat::Zero(D + 2 * H, Vt));
    params_.add("out.b", Mat::Zero(1, Vt));
    for (int l = 0; l < config_.decoder_layers; ++l) {
      const Index in = l == 0 ? E + 2 * H : D;
      params_.add("dec.l" + std::to_string(l) + ".W", Mat::Zero(in + D, 4 * D));
      params_.add("dec.l" + std::to_string(l) + ".b", Mat::Zero(1, 4 * D));
    }
  }

  Var<Scalar> input_dropout(Var<Scalar> x, Rng* rng) const {
    if (rng == nullptr || config_.dropout <= 0.0) return x;
    return ad::dropout(x, ad::dropout_mask<Scalar>(x.rows(), x.cols(), config_.dropout, *rng), config_.dropout);
  }

  /// Gates ordered input, forget, candidate, output.
  static std::pair<Var<Scalar>, Var<Scalar>> lstm_cell(Var<Scalar> x, Var<Scalar> h, Var<Scalar> c,
                                                       Var<Scalar> W, Var<Scalar> bias) {
    const Index n = h.cols();
    const Var<Scalar> z = ad::add_row(ad::matmul(ad::concat(x, h, 1), W), bias);
    const Var<Scalar> i = ad::sigmoid(ad::slice(z, 1, 0, n));
    const Var<Scalar> f = ad::sigmoid(ad::slice(z, 1, n, n));
    const Var<Scalar> g = ad::tanh(ad::slice(z, 1, 2 * n, n));
    const Var<Scalar> o = ad::sigmoid(ad::slice(z, 1, 3 * n, n));
    const Var<Scalar> c2 = ad::add(ad::mul(f, c), ad::mul(i, g));
    const Var<Scalar> h2 = ad::mul(o, ad::tanh(c2));
    return {h2, c2};
  }

  /// Argmax over real output tokens; PAD and BOS are never emitted.
  static Index argmax_token(const Mat& z, Index row) {
    Index best = text::kEos;
    for (Index v = text::kEos + 1; v < z.cols(); ++v) {
      if (z(row, v) > z(row, best)) best = v;
    }
    return best;
  }

  static double log_softmax_at(const Mat& z, Index row, Index col) {
    const double mx = static_cast<double>(z.row(row).maxCoeff());
    double s = 0;
    for (Index v = 0; v < z.cols(); ++v) s += std::exp(static_cast<double>(z(row, v)) - mx);
    return static_cast<double>(z(row, col)) - mx - std::log(s);
  }

  static std::vector<double> attention_row(const Mat& a, Index row, std::size_t length) {
    std::vector<double> out(length);
    for (std::size_t j = 0; j < length; ++j) out[j] = static_cast<double>(a(row, static_cast<Index>(j)));
    return out;
  }

  /// `single` repeated for K identical batch rows.
  Encoded replicate(ad::Tape<Scalar>& tape, const Encoded& single, Index K) const {
    if (K == 1) return single;
    Encoded e;
    e.batch = K;
    e.length = single.length;
    const Mat& mem = single.memory.value();
    const Mat& proj = single.projected.value();
    Mat m(mem.rows() * K, mem.cols()), pr(proj.rows() * K, proj.cols());
    for (Index j = 0; j < single.length; ++j) {
      for (Index k = 0; k < K; ++k) {
        m.row(j * K + k) = mem.row(j);
        pr.row(j * K + k) = proj.row(j);
      }
    }
    e.memory = tape.constant(std::move(m));
    e.projected = tape.constant(std::move(pr));
    e.score_mask = single.score_mask.replicate(K, 1);
    return e;
  }

  static State select_rows(ad::Tape<Scalar>& tape, const State& s, const std::vector<Index>& rows) {
    State out;
    const auto pick = [&](const Var<Scalar>& v) {
      const Mat& src = v.value();
      Mat m(static_cast<Index>(rows.size()), src.cols());
      for (std::size_t r = 0; r < rows.size(); ++r) m.row(static_cast<Index>(r)) = src.row(rows[r]);
      return tape.constant(std::move(m));
    };
    for (const auto& h : s.h) out.h.push_back(pick(h));
    for (const auto& c : s.c) out.c.push_back(pick(c));
    return out;
  }

  ModelConfig config_;
  ad::ParamSet<Scalar> params_;
};

}  // namespace chunkfb::seq2seq
