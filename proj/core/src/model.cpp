#include "nagm/model.hpp"

#include <algorithm>
#include <cmath>

namespace nagm {

void ModelConfig::validate() const {
  if (embed_dim < 1 || hidden_dim < 1 || vocab_size < 1) {
    throw ConfigError("model config: dimensions must be >= 1");
  }
  if (margin < 0.0 || alpha < 0.0) {
    throw ConfigError("model config: margin and alpha must be >= 0");
  }
  if (max_decode_len < 1) {
    throw ConfigError("model config: max_decode_len must be >= 1");
  }
}

namespace {

void lstm_shapes(std::map<std::string, std::vector<std::size_t>>& out,
                 const std::string& prefix, std::size_t in_dim,
                 std::size_t hid) {
  for (const char* g : {"i", "f", "o", "c"}) {
    out[prefix + ".W_" + g] = {hid, in_dim};
    out[prefix + ".U_" + g] = {hid, hid};
    out[prefix + ".b_" + g] = {hid};
  }
}

void decoder_head_shapes(std::map<std::string, std::vector<std::size_t>>& out,
                         const std::string& prefix, std::size_t embed,
                         std::size_t hid) {
  out[prefix + ".init_h.W"] = {hid, 2 * hid};
  out[prefix + ".init_h.b"] = {hid};
  out[prefix + ".init_c.W"] = {hid, 2 * hid};
  out[prefix + ".init_c.b"] = {hid};
  out[prefix + ".proj.W"] = {embed, hid};
  out[prefix + ".proj.b"] = {embed};
}

}  // namespace

std::map<std::string, std::vector<std::size_t>> model_param_shapes(
    const ModelConfig& cfg) {
  cfg.validate();
  std::size_t e = cfg.embed_dim, h = cfg.hidden_dim, k = cfg.vocab_size;
  std::map<std::string, std::vector<std::size_t>> out;
  out["embed"] = {e, k};
  out["U"] = {e, k};
  out["type.c"] = {e};
  out["type.s"] = {e};
  lstm_shapes(out, "enc.f", 2 * e, h);
  lstm_shapes(out, "enc.b", 2 * e, h);
  lstm_shapes(out, "cdec", 2 * e, h);
  decoder_head_shapes(out, "cdec", e, h);
  // Gated supplement cell: W over [y, T], U over h'', Wa over cx.
  for (const char* g : {"i", "f", "o", "l"}) {
    out[std::string("sdec.W_") + g] = {h, 2 * e};
    out[std::string("sdec.U_") + g] = {h, h};
    out[std::string("sdec.Wa_") + g] = {h, 2 * h};
    out[std::string("sdec.b_") + g] = {h};
  }
  decoder_head_shapes(out, "sdec", e, h);
  lstm_shapes(out, "embc.f", e, h);
  lstm_shapes(out, "embc.b", e, h);
  if (!cfg.share_ensemble_weights) {
    lstm_shapes(out, "embs.f", e, h);
    lstm_shapes(out, "embs.b", e, h);
  }
  out["att.W_a"] = {2 * h, h};
  out["att.V_a"] = {2 * h};
  return out;
}

ParamStore init_model_params(const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamStore store;
  for (const auto& [name, shape] : model_param_shapes(cfg)) {
    bool is_bias = name.find(".b_") != std::string::npos ||
                   name.size() > 2 && name.compare(name.size() - 2, 2, ".b") == 0;
    if (shape.size() == 2) {
      store.add(name, glorot(shape[0], shape[1], rng));
    } else if (is_bias) {
      Tensor t = Tensor::zeros(shape);
      if (name.find(".b_f") != std::string::npos) {
        for (double& v : t.data) v = 1.0;  // stable early forget gates
      }
      store.add(name, std::move(t));
    } else {
      // 1-D non-bias tensors (type vectors, V_a): small uniform init.
      Tensor t = Tensor::zeros(shape);
      double limit = std::sqrt(6.0 / static_cast<double>(1 + shape[0]));
      for (double& v : t.data) v = uniform_real(rng, -limit, limit);
      store.add(name, std::move(t));
    }
  }
  return store;
}

ModelGraph::ModelGraph(Tape& tape, const ParamStore& params,
                       const ModelConfig& config)
    : tape_(&tape), params_(&params), config_(&config) {
  config.validate();
}

Var ModelGraph::param(const std::string& name) {
  auto it = leaves_.find(name);
  if (it != leaves_.end()) return it->second;
  Var v = tape_->leaf(params_->at(name));
  leaves_.emplace(name, v);
  return v;
}

Var ModelGraph::zero_vec(std::size_t n) {
  return tape_->leaf(Tensor::zeros({n}));
}

Var ModelGraph::type_vector(SentenceType stype) {
  if (!config_->use_sentence_type) return zero_vec(config_->embed_dim);
  return param(stype == SentenceType::Conclusion ? "type.c" : "type.s");
}

Var ModelGraph::embed_token(std::size_t token) {
  if (token >= config_->vocab_size) {
    throw DomainError("token id " + std::to_string(token) +
                      " out of range for vocab of size " +
                      std::to_string(config_->vocab_size));
  }
  return tape_->column(param("embed"), token);
}

ModelGraph::LstmVars ModelGraph::lstm_vars(const std::string& prefix) {
  return LstmVars{param(prefix + ".W_i"), param(prefix + ".W_f"),
                  param(prefix + ".W_o"), param(prefix + ".W_c"),
                  param(prefix + ".U_i"), param(prefix + ".U_f"),
                  param(prefix + ".U_o"), param(prefix + ".U_c"),
                  param(prefix + ".b_i"), param(prefix + ".b_f"),
                  param(prefix + ".b_o"), param(prefix + ".b_c")};
}

std::pair<Var, Var> ModelGraph::lstm_step(const LstmVars& v, Var x, Var h,
                                          Var c) {
  Tape& t = *tape_;
  Var i = t.sigmoid(t.add(t.add(t.matvec(v.w_i, x), t.matvec(v.u_i, h)), v.b_i));
  Var f = t.sigmoid(t.add(t.add(t.matvec(v.w_f, x), t.matvec(v.u_f, h)), v.b_f));
  Var o = t.sigmoid(t.add(t.add(t.matvec(v.w_o, x), t.matvec(v.u_o, h)), v.b_o));
  Var g = t.tanh(t.add(t.add(t.matvec(v.w_c, x), t.matvec(v.u_c, h)), v.b_c));
  Var cell = t.add(t.mul(i, g), t.mul(f, c));
  Var hidden = t.mul(o, t.tanh(cell));
  return {hidden, cell};
}

std::vector<Var> ModelGraph::bilstm(const std::string& prefix,
                                    const std::vector<Var>& inputs) {
  std::size_t h = config_->hidden_dim;
  LstmVars fw = lstm_vars(prefix + ".f");
  LstmVars bw = lstm_vars(prefix + ".b");
  std::vector<Var> fwd(inputs.size()), rev(inputs.size());
  Var hf = zero_vec(h), cf = zero_vec(h);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::tie(hf, cf) = lstm_step(fw, inputs[i], hf, cf);
    fwd[i] = hf;
  }
  Var hb = zero_vec(h), cb = zero_vec(h);
  for (std::size_t i = inputs.size(); i-- > 0;) {
    std::tie(hb, cb) = lstm_step(bw, inputs[i], hb, cb);
    rev[i] = hb;
  }
  std::vector<Var> out(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i)
    out[i] = tape_->concat(fwd[i], rev[i]);
  return out;
}

ModelGraph::Encoded ModelGraph::encode_question(const TokenSeq& q,
                                                SentenceType stype) {
  if (q.empty()) throw DomainError("encode_question: empty sequence");
  Var tv = type_vector(stype);
  std::vector<Var> inputs;
  inputs.reserve(q.size());
  for (std::size_t tok : q)
    inputs.push_back(tape_->concat(embed_token(tok), tv));
  Encoded enc;
  enc.states = bilstm("enc", inputs);
  enc.pooled = tape_->max_pool(enc.states);
  return enc;
}

std::pair<Var, Var> ModelGraph::init_state(const std::string& dec_prefix,
                                           Var pooled) {
  Var h = tape_->affine(pooled, param(dec_prefix + ".init_h.W"),
                        param(dec_prefix + ".init_h.b"));
  Var c = tape_->affine(pooled, param(dec_prefix + ".init_c.W"),
                        param(dec_prefix + ".init_c.b"));
  return {tape_->tanh(h), tape_->tanh(c)};
}

Var ModelGraph::output_logits(const std::string& dec_prefix, Var h) {
  Var z = tape_->affine(h, param(dec_prefix + ".proj.W"),
                        param(dec_prefix + ".proj.b"));
  return tape_->matvec_t(param("U"), z);
}

std::pair<Var, Var> ModelGraph::decoder_init(const std::string& dec_prefix,
                                             Var pooled) {
  return init_state(dec_prefix, pooled);
}

ModelGraph::Step ModelGraph::conclusion_step(std::size_t prev_token, Var h_prev,
                                             Var cell_prev) {
  Var x = tape_->concat(embed_token(prev_token),
                        type_vector(SentenceType::Conclusion));
  auto [h, c] = lstm_step(lstm_vars("cdec"), x, h_prev, cell_prev);
  return Step{h, c, output_logits("cdec", h)};
}

ModelGraph::Decoded ModelGraph::decode_conclusion(const TokenSeq& targets,
                                                  Var question_embedding) {
  Decoded out;
  auto [h, c] = init_state("cdec", question_embedding);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    std::size_t prev = (t == 0) ? kBos : targets[t - 1];
    Step step = conclusion_step(prev, h, c);
    h = step.h;
    c = step.cell;
    out.states.push_back(step.h);
    out.logits.push_back(step.logits);
  }
  return out;
}

std::pair<Var, Var> ModelGraph::attention_context(Var h_prev,
                                                  Var conclusion_embedding) {
  Var pre = tape_->tanh(
      tape_->add(tape_->matvec(param("att.W_a"), h_prev), conclusion_embedding));
  Var alpha = tape_->sigmoid(tape_->dot(param("att.V_a"), pre));
  Var cx = tape_->scale_by(conclusion_embedding, alpha);
  return {alpha, cx};
}

ModelGraph::Step ModelGraph::supplement_step(std::size_t prev_token, Var h_prev,
                                             Var cell_prev, Var cx) {
  Tape& t = *tape_;
  Var x = t.concat(embed_token(prev_token),
                   type_vector(SentenceType::Supplement));
  auto gate_pre = [&](const char* z) {
    Var pre = t.add(t.add(t.matvec(param(std::string("sdec.W_") + z), x),
                          t.matvec(param(std::string("sdec.U_") + z), h_prev)),
                    param(std::string("sdec.b_") + z));
    if (cx.valid()) {
      pre = t.add(pre, t.matvec(param(std::string("sdec.Wa_") + z), cx));
    }
    return pre;
  };
  Var i = t.sigmoid(gate_pre("i"));
  Var f = t.sigmoid(gate_pre("f"));
  Var o = t.sigmoid(gate_pre("o"));
  Var cand = t.tanh(gate_pre("l"));
  Var cell = t.add(t.mul(i, cand), t.mul(f, cell_prev));
  Var h = t.mul(o, t.tanh(cell));
  return Step{h, cell, output_logits("sdec", h)};
}

ModelGraph::Decoded ModelGraph::decode_supplement(
    const TokenSeq& targets, Var question_embedding,
    std::optional<Var> conclusion_embedding) {
  Decoded out;
  auto [h, c] = init_state("sdec", question_embedding);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    Var cx;  // invalid: attention disabled
    if (conclusion_embedding && config_->use_attention) {
      auto [alpha, ctx] = attention_context(h, *conclusion_embedding);
      out.alphas.push_back(alpha);
      cx = ctx;
    }
    std::size_t prev = (t == 0) ? kBos : targets[t - 1];
    Step step = supplement_step(prev, h, c, cx);
    h = step.h;
    c = step.cell;
    out.states.push_back(step.h);
    out.logits.push_back(step.logits);
  }
  return out;
}

Var ModelGraph::sequence_embedding(const std::vector<Var>& logits,
                                   SentenceType side) {
  if (logits.empty()) throw DomainError("sequence_embedding: empty sequence");
  Var u = param("U");
  std::vector<Var> soft;
  soft.reserve(logits.size());
  for (Var l : logits) soft.push_back(tape_->matvec(u, tape_->softmax(l)));
  std::string prefix =
      (side == SentenceType::Conclusion || config_->share_ensemble_weights)
          ? "embc"
          : "embs";
  return tape_->max_pool(bilstm(prefix, soft));
}

Var ModelGraph::loss_closeness(Var question_embedding, Var conc_pos,
                               Var supp_pos, Var conc_neg, Var supp_neg,
                               double margin) {
  Tape& t = *tape_;
  Var pos = t.cosine(question_embedding, t.concat(conc_pos, supp_pos));
  Var combos[3] = {t.concat(conc_pos, supp_neg), t.concat(conc_neg, supp_pos),
                   t.concat(conc_neg, supp_neg)};
  Var total;
  for (Var combo : combos) {
    Var neg = t.cosine(question_embedding, combo);
    Var hinge = t.relu(t.add_const(t.sub(neg, pos), margin));
    total = total.valid() ? t.add(total, hinge) : hinge;
  }
  return total;
}

Var ModelGraph::cross_entropy(const std::vector<Var>& logits,
                              const TokenSeq& targets) {
  if (logits.size() != targets.size()) {
    throw DimensionError("cross_entropy: " + std::to_string(logits.size()) +
                         " logits vs " + std::to_string(targets.size()) +
                         " targets");
  }
  Var total;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    Var nll = tape_->scale(tape_->log_softmax_pick(logits[t], targets[t]), -1.0);
    total = total.valid() ? tape_->add(total, nll) : nll;
  }
  return total;
}

std::map<std::string, Tensor> ModelGraph::collect_grads() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, tensor] : params_->params()) {
    auto it = leaves_.find(name);
    out.emplace(name, it != leaves_.end() ? tape_->grad(it->second)
                                          : Tensor::zeros(tensor.shape));
  }
  return out;
}

namespace {

void copy_vals(const Tape& tape, const std::vector<Var>& vars,
               std::vector<Tensor>& out) {
  out.clear();
  for (Var v : vars) out.push_back(tape.value(v));
}

struct ExampleVars {
  Var loss_w, loss_s, ce;
};

ExampleVars build_example(ModelGraph& g, Tape& tape, const ExamplePair& e,
                          const ModelConfig& cfg, ForwardTrace* trace) {
  auto enc_c = g.encode_question(e.question, SentenceType::Conclusion);
  auto enc_s = g.encode_question(e.question, SentenceType::Supplement);
  Var o_q = tape.concat(enc_c.pooled, enc_s.pooled);

  auto dec_c = g.decode_conclusion(e.conclusion, enc_c.pooled);
  Var oc_pos = g.sequence_embedding(dec_c.logits, SentenceType::Conclusion);
  auto dec_s = g.decode_supplement(e.supplement, enc_s.pooled,
                                   cfg.use_attention
                                       ? std::optional<Var>(oc_pos)
                                       : std::nullopt);
  Var os_pos = g.sequence_embedding(dec_s.logits, SentenceType::Supplement);

  auto dec_cn = g.decode_conclusion(e.neg_conclusion, enc_c.pooled);
  Var oc_neg = g.sequence_embedding(dec_cn.logits, SentenceType::Conclusion);
  auto dec_sn = g.decode_supplement(e.neg_supplement, enc_s.pooled,
                                    cfg.use_attention
                                        ? std::optional<Var>(oc_neg)
                                        : std::nullopt);
  Var os_neg = g.sequence_embedding(dec_sn.logits, SentenceType::Supplement);

  Var ls = g.loss_closeness(o_q, oc_pos, os_pos, oc_neg, os_neg, cfg.margin);
  Var ce = tape.add(g.cross_entropy(dec_c.logits, e.conclusion),
                    g.cross_entropy(dec_s.logits, e.supplement));
  Var lw = tape.add(tape.scale(ls, cfg.alpha), ce);

  if (trace) {
    copy_vals(tape, enc_c.states, trace->encoder_states_c);
    copy_vals(tape, enc_s.states, trace->encoder_states_s);
    copy_vals(tape, dec_c.logits, trace->conclusion_logits);
    copy_vals(tape, dec_s.logits, trace->supplement_logits);
    trace->alphas.clear();
    for (Var a : dec_s.alphas) trace->alphas.push_back(tape.scalar(a));
    trace->question_embedding = tape.value(o_q);
    trace->conclusion_embedding_pos = tape.value(oc_pos);
    trace->supplement_embedding_pos = tape.value(os_pos);
    trace->conclusion_embedding_neg = tape.value(oc_neg);
    trace->supplement_embedding_neg = tape.value(os_neg);
    trace->loss_closeness = tape.scalar(ls);
    trace->cross_entropy = tape.scalar(ce);
    trace->loss_total = tape.scalar(lw);
  }
  return ExampleVars{lw, ls, ce};
}

}  // namespace

BackpropResult batch_loss(const std::vector<ExamplePair>& batch,
                          const ParamStore& params, const ModelConfig& config,
                          std::vector<ForwardTrace>* traces) {
  if (batch.empty()) throw DomainError("batch_loss: empty batch");
  Tape tape;
  ModelGraph graph(tape, params, config);
  if (traces) traces->assign(batch.size(), ForwardTrace{});
  Var total;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    ExampleVars ev = build_example(graph, tape, batch[i], config,
                                   traces ? &(*traces)[i] : nullptr);
    total = total.valid() ? tape.add(total, ev.loss_w) : ev.loss_w;
  }
  Var mean = tape.scale(total, 1.0 / static_cast<double>(batch.size()));
  double value = tape.scalar(mean);
  if (!std::isfinite(value)) {
    throw TrainingError("batch_loss: non-finite loss");
  }
  tape.backward(mean);
  BackpropResult result;
  result.value = value;
  result.grads = graph.collect_grads();
  return result;
}

BackpropResult loss_total(const ExamplePair& example, const ParamStore& params,
                          const ModelConfig& config, ForwardTrace* trace) {
  std::vector<ForwardTrace> traces;
  BackpropResult r =
      batch_loss({example}, params, config, trace ? &traces : nullptr);
  if (trace) *trace = traces[0];
  return r;
}

namespace {

std::size_t argmax_token(const Tensor& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits.data[i] > logits.data[best]) best = i;  // ties keep lowest id
  }
  return best;
}

}  // namespace

Generated generate(const TokenSeq& question, const ParamStore& params,
                   const ModelConfig& config) {
  if (question.empty()) throw DomainError("generate: empty question");
  Tape tape;
  ModelGraph graph(tape, params, config);
  Generated out;

  auto enc_c = graph.encode_question(question, SentenceType::Conclusion);
  auto enc_s = graph.encode_question(question, SentenceType::Supplement);
  out.trace.question_embedding =
      tape.value(tape.concat(enc_c.pooled, enc_s.pooled));

  // Greedy conclusion decode; soft outputs come from the realized steps,
  // including the one that emitted EOS.
  std::vector<Var> c_logits;
  {
    auto [h, c] = graph.decoder_init("cdec", enc_c.pooled);
    std::size_t prev = kBos;
    for (std::size_t t = 0; t < config.max_decode_len; ++t) {
      auto step = graph.conclusion_step(prev, h, c);
      h = step.h;
      c = step.cell;
      c_logits.push_back(step.logits);
      std::size_t tok = argmax_token(tape.value(step.logits));
      if (tok == kEos) break;
      out.conclusion.push_back(tok);
      prev = tok;
    }
  }
  copy_vals(tape, c_logits, out.trace.conclusion_logits);

  Var oc = graph.sequence_embedding(c_logits, SentenceType::Conclusion);
  out.trace.conclusion_embedding_pos = tape.value(oc);

  std::vector<Var> s_logits;
  {
    auto [h, c] = graph.decoder_init("sdec", enc_s.pooled);
    std::size_t prev = kBos;
    for (std::size_t t = 0; t < config.max_decode_len; ++t) {
      Var cx;
      if (config.use_attention) {
        auto [alpha, ctx] = graph.attention_context(h, oc);
        out.trace.alphas.push_back(tape.scalar(alpha));
        cx = ctx;
      }
      auto step = graph.supplement_step(prev, h, c, cx);
      h = step.h;
      c = step.cell;
      s_logits.push_back(step.logits);
      std::size_t tok = argmax_token(tape.value(step.logits));
      if (tok == kEos) break;
      out.supplement.push_back(tok);
      prev = tok;
    }
  }
  copy_vals(tape, s_logits, out.trace.supplement_logits);
  return out;
}

}  // namespace nagm
