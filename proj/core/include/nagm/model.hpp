#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nagm/corpus.hpp"
#include "nagm/gradcheck.hpp"
#include "nagm/params.hpp"
#include "nagm/tape.hpp"

namespace nagm {

struct ModelConfig {
  std::size_t embed_dim = 32;   // token embedding size
  std::size_t hidden_dim = 32;  // LSTM hidden size per direction
  std::size_t vocab_size = 0;
  double margin = 0.2;
  double alpha = 1.0;
  bool use_attention = true;      // false: NAGMWA, decoders coupled only by loss
  bool use_sentence_type = true;  // false: type vectors pinned to zero
  bool share_ensemble_weights = false;
  std::size_t max_decode_len = 60;

  void validate() const;
};

/// All trainable tensors for the given config, glorot-initialized from the
/// seed (biases zero, forget-gate biases +1).
ParamStore init_model_params(const ModelConfig& config, std::uint64_t seed);

/// Expected tensor shapes for a config; used for checkpoint validation.
std::map<std::string, std::vector<std::size_t>> model_param_shapes(
    const ModelConfig& config);

/// Intermediate activations of one forward pass, copied off the tape.
struct ForwardTrace {
  std::vector<Tensor> encoder_states_c;
  std::vector<Tensor> encoder_states_s;
  std::vector<Tensor> conclusion_logits;
  std::vector<Tensor> supplement_logits;
  std::vector<double> alphas;
  Tensor question_embedding;  // [O_q^c, O_q^s]
  Tensor conclusion_embedding_pos, supplement_embedding_pos;
  Tensor conclusion_embedding_neg, supplement_embedding_neg;
  double loss_closeness = 0.0;
  double cross_entropy = 0.0;
  double loss_total = 0.0;
};

enum class SentenceType { Conclusion, Supplement };

/// Builds the model computation on a Tape against a ParamStore. Parameters
/// become tape leaves lazily; collect_grads() reads their adjoints back
/// after backward().
class ModelGraph {
 public:
  ModelGraph(Tape& tape, const ParamStore& params, const ModelConfig& config);

  Var param(const std::string& name);
  Tape& tape() { return *tape_; }

  struct Encoded {
    std::vector<Var> states;  // h_i = [h^f_i, h^b_i], one per position
    Var pooled;               // max-pool over time, 2*hidden_dim
  };
  /// BiLSTM over [word embedding, type vector] composite inputs.
  Encoded encode_question(const TokenSeq& q, SentenceType stype);

  struct Decoded {
    std::vector<Var> states;
    std::vector<Var> logits;
    std::vector<Var> alphas;  // supplement side only, when attention is on
  };
  /// Teacher-forced conclusion decoder; state initialized from the pooled
  /// question embedding, logits shared through the output matrix U.
  Decoded decode_conclusion(const TokenSeq& targets, Var question_embedding);
  /// Teacher-forced supplement decoder with the gated attention cell.
  /// `conclusion_embedding` empty => attention off (cx_t = 0).
  Decoded decode_supplement(const TokenSeq& targets, Var question_embedding,
                            std::optional<Var> conclusion_embedding);

  /// Soft word outputs U * softmax(logits_t) per step, then a dedicated
  /// BiLSTM + max-pool.
  Var sequence_embedding(const std::vector<Var>& logits, SentenceType side);

  /// alpha_t = sigmoid(V_a^T tanh(W_a h''_{t-1} + O_c)); cx_t = alpha_t O_c.
  std::pair<Var, Var> attention_context(Var h_prev, Var conclusion_embedding);

  struct Step {
    Var h;
    Var cell;
    Var logits;
  };
  /// One gated supplement-decoder step. `cx` invalid => no attention input.
  Step supplement_step(std::size_t prev_token, Var h_prev, Var cell_prev,
                       Var cx);
  /// One plain conclusion-decoder step.
  Step conclusion_step(std::size_t prev_token, Var h_prev, Var cell_prev);
  /// Learned affine + tanh initial (h, cell) from the pooled question
  /// embedding; `dec_prefix` is "cdec" or "sdec".
  std::pair<Var, Var> decoder_init(const std::string& dec_prefix, Var pooled);

  /// Hinge loss over the combination set.
  Var loss_closeness(Var question_embedding, Var conc_pos, Var supp_pos,
                     Var conc_neg, Var supp_neg, double margin);

  /// Sum of per-token negative log-likelihoods.
  Var cross_entropy(const std::vector<Var>& logits, const TokenSeq& targets);

  std::map<std::string, Tensor> collect_grads() const;

 private:
  Var type_vector(SentenceType stype);
  Var embed_token(std::size_t token);
  Var zero_vec(std::size_t n);
  struct LstmVars {
    Var w_i, w_f, w_o, w_c, u_i, u_f, u_o, u_c, b_i, b_f, b_o, b_c;
  };
  LstmVars lstm_vars(const std::string& prefix);
  std::pair<Var, Var> lstm_step(const LstmVars& v, Var x, Var h, Var c);
  std::vector<Var> bilstm(const std::string& prefix,
                          const std::vector<Var>& inputs);
  Var output_logits(const std::string& dec_prefix, Var h);
  std::pair<Var, Var> init_state(const std::string& dec_prefix, Var pooled);

  Tape* tape_;
  const ParamStore* params_;
  const ModelConfig* config_;
  std::map<std::string, Var> leaves_;
};

struct ExamplePair {
  TokenSeq question;
  TokenSeq conclusion;   // gold targets, EOS-terminated
  TokenSeq supplement;   // gold targets, EOS-terminated
  TokenSeq neg_conclusion;
  TokenSeq neg_supplement;
};

/// L_w = alpha * L_s + masked cross-entropy over the merged sequence.
/// Single example; builds and discards its own tape.
BackpropResult loss_total(const ExamplePair& example, const ParamStore& params,
                          const ModelConfig& config,
                          ForwardTrace* trace = nullptr);

/// Mean L_w over the batch, with gradients of the mean.
BackpropResult batch_loss(const std::vector<ExamplePair>& batch,
                          const ParamStore& params, const ModelConfig& config,
                          std::vector<ForwardTrace>* traces = nullptr);

struct Generated {
  TokenSeq conclusion;  // without EOS
  TokenSeq supplement;  // without EOS
  ForwardTrace trace;
};

/// Greedy decoding: argmax per step (ties to the lowest id) until EOS or
/// max_decode_len.
Generated generate(const TokenSeq& question, const ParamStore& params,
                   const ModelConfig& config);

}  // namespace nagm
