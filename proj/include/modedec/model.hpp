#ifndef MODEDEC_MODEL_HPP
#define MODEDEC_MODEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "modedec/nn.hpp"
#include "modedec/signal.hpp"
#include "modedec/tape.hpp"
#include "modedec/tvd.hpp"

namespace modedec {

enum class InnerUpdate { anchored, from_current };
enum class TvdGrad { straight_through, none };
enum class Variant { ircnn, ircnn_tvd, ircnn_att, ircnn_plus };

struct ModelConfig {
  int M = 2;          // stages (one per IMF)
  int S = 3;          // inner sifting iterations
  int K = 32;         // base kernel length
  int n_scales = 3;   // multi-scale conv branches, lengths floor(K/2^k)
  int d_att = 16;     // attention embedding width
  bool use_multiscale_attention = true;
  bool use_tvd = true;
  InnerUpdate inner_update = InnerUpdate::anchored;
  nn::Activation activation = nn::Activation::tanh;
  nn::PadMode pad_mode = nn::PadMode::zero;
  TvdParams tvd{};
  TvdGrad tvd_grad = TvdGrad::straight_through;

  void validate() const;
  /// Kernel length at scale k = 0..n_scales-1.
  int scale_len(int k) const { return K >> k; }
  /// Channels entering the second conv: input + scales + attention.
  int concat_width() const { return 1 + n_scales + 1; }
};

struct InnerBlockWeights {
  std::vector<Eigen::VectorXd> w1;  // n_scales kernels, 1 x scale_len(k)
  nn::AttentionParams att;
  Eigen::MatrixXd w2;               // concat_width x K
  Eigen::VectorXd w3;               // raw; applied as softmax_vec(w3)
};

struct Model {
  ModelConfig config;
  std::vector<std::vector<InnerBlockWeights>> stages;  // M x S

  static Model init(const ModelConfig& cfg, std::uint64_t seed);

  void validate() const;
  Eigen::Index param_count() const;
  Eigen::VectorXd flatten_params() const;
  void set_params(const Eigen::VectorXd& flat);
};

ModelConfig build_variant(Variant v, ModelConfig base);
Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);
std::string to_string(InnerUpdate u);
std::string to_string(TvdGrad g);
std::string to_string(nn::Activation a);
std::string to_string(nn::PadMode p);
InnerUpdate inner_update_from_string(const std::string& s);
TvdGrad tvd_grad_from_string(const std::string& s);
nn::Activation activation_from_string(const std::string& s);
nn::PadMode pad_mode_from_string(const std::string& s);

/// One pass of the inner block: multi-scale convs + attention + concat +
/// conv + softmax-normalized averaging filter (or the legacy two-conv block
/// when use_multiscale_attention is off).
Eigen::VectorXd inner_block_forward(const Eigen::VectorXd& x,
                                    const InnerBlockWeights& w,
                                    const ModelConfig& cfg);

/// S-step inner loop. Anchored mode recomputes X = x0 - block(X) each step;
/// from_current subtracts in place. trace, when given, receives each iterate.
Eigen::VectorXd stage_forward(const Eigen::VectorXd& x0,
                              const std::vector<InnerBlockWeights>& stage,
                              const ModelConfig& cfg,
                              std::vector<Eigen::VectorXd>* trace = nullptr);

ComponentSet decompose(const Eigen::VectorXd& x, const Model& model);
ComponentSet decompose(const Signal& x, const Model& model);

std::string serialize(const Model& model);
Model deserialize(const std::string& document);

// --- Tape mirror for training ------------------------------------------------

struct TapeBlock {
  std::vector<ad::Tape::Var> w1;
  ad::Tape::Var w_q, w_k, w_v, w_o, b_o;
  ad::Tape::Var w2, w3;
};

struct TapeModel {
  std::vector<std::vector<TapeBlock>> stages;
};

/// Registers every parameter of model as a tape leaf, in flatten order.
TapeModel make_tape_model(ad::Tape& tape, const Model& model);

/// Collects d(loss)/d(param) in the same order as Model::flatten_params.
Eigen::VectorXd gather_grads(const ad::Tape& tape, const TapeModel& tm,
                             const Model& model);

/// Full decomposition graph of one example on the tape. Returns the predicted
/// components (post-TVD per config) and the residue var.
struct TapeComponents {
  std::vector<ad::Tape::Var> components;
  ad::Tape::Var residue;
};
TapeComponents decompose_on_tape(ad::Tape& tape, const TapeModel& tm,
                                 const ModelConfig& cfg, ad::Tape::Var input);

/// Sum of squared errors of all components vs labels, plus optional QTV
/// penalty; the scalar loss var for one example.
ad::Tape::Var example_loss_on_tape(ad::Tape& tape, const TapeModel& tm,
                                   const ModelConfig& cfg,
                                   const Eigen::VectorXd& feature,
                                   const std::vector<Eigen::VectorXd>& labels,
                                   double eta_qtv);

}  // namespace modedec

#endif
