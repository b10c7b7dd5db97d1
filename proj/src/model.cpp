#include "modedec/model.hpp"

#include <json.hpp>
#include <random>

namespace modedec {

using nlohmann::json;

void ModelConfig::validate() const {
  if (M < 1) throw invalid_input("ModelConfig: M must be >= 1");
  if (S < 1) throw invalid_input("ModelConfig: S must be >= 1");
  if (K < 4) throw invalid_input("ModelConfig: K must be >= 4");
  if (n_scales < 1) throw invalid_input("ModelConfig: n_scales must be >= 1");
  if (scale_len(n_scales - 1) < 1)
    throw invalid_input("ModelConfig: K too small for n_scales");
  if (d_att < 1) throw invalid_input("ModelConfig: d_att must be >= 1");
  tvd.validate();
}

namespace {

Eigen::VectorXd uniform_vec(Eigen::Index n, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-limit, limit);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

double glorot_limit(double fan_in, double fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

}  // namespace

Model Model::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Model m;
  m.config = cfg;
  m.stages.resize(cfg.M);
  for (auto& stage : m.stages) {
    stage.resize(cfg.S);
    for (auto& b : stage) {
      b.w1.resize(cfg.n_scales);
      for (int k = 0; k < cfg.n_scales; ++k) {
        const int len = cfg.scale_len(k);
        b.w1[k] = uniform_vec(len, glorot_limit(len, len), rng);
      }
      const double att_limit = glorot_limit(1.0, cfg.d_att);
      b.att.w_q = uniform_vec(cfg.d_att, att_limit, rng);
      b.att.w_k = uniform_vec(cfg.d_att, att_limit, rng);
      b.att.w_v = uniform_vec(cfg.d_att, att_limit, rng);
      b.att.w_o = uniform_vec(cfg.d_att, att_limit, rng);
      b.att.b_o = 0.0;
      const int c_cat = cfg.concat_width();
      const double w2_limit = glorot_limit(c_cat * cfg.K, cfg.K);
      b.w2 = Eigen::MatrixXd(c_cat, cfg.K);
      for (int r = 0; r < c_cat; ++r) b.w2.row(r) = uniform_vec(cfg.K, w2_limit, rng);
      // Zeros so softmax(w3) starts as a uniform averaging filter.
      b.w3 = Eigen::VectorXd::Zero(cfg.K);
    }
  }
  return m;
}

void Model::validate() const {
  config.validate();
  if (static_cast<int>(stages.size()) != config.M)
    throw invalid_input("Model: stage count mismatch");
  for (const auto& stage : stages) {
    if (static_cast<int>(stage.size()) != config.S)
      throw invalid_input("Model: block count mismatch");
    for (const auto& b : stage) {
      if (static_cast<int>(b.w1.size()) != config.n_scales)
        throw invalid_input("Model: scale count mismatch");
      for (int k = 0; k < config.n_scales; ++k)
        if (b.w1[k].size() != config.scale_len(k))
          throw invalid_input("Model: w1 kernel length mismatch");
      b.att.validate();
      if (b.att.d_att() != config.d_att)
        throw invalid_input("Model: attention width mismatch");
      if (b.w2.rows() != config.concat_width() || b.w2.cols() != config.K)
        throw invalid_input("Model: w2 shape mismatch");
      if (b.w3.size() != config.K)
        throw invalid_input("Model: w3 length mismatch");
      for (int k = 0; k < config.n_scales; ++k)
        if (!b.w1[k].allFinite()) throw invalid_input("Model: non-finite w1");
      if (!b.w2.allFinite() || !b.w3.allFinite())
        throw invalid_input("Model: non-finite parameter");
    }
  }
}

Eigen::Index Model::param_count() const {
  Eigen::Index n = 0;
  for (const auto& stage : stages)
    for (const auto& b : stage) {
      for (const auto& w : b.w1) n += w.size();
      n += 4 * b.att.w_q.size() + 1;
      n += b.w2.size() + b.w3.size();
    }
  return n;
}

Eigen::VectorXd Model::flatten_params() const {
  Eigen::VectorXd flat(param_count());
  Eigen::Index p = 0;
  auto put_vec = [&](const Eigen::VectorXd& v) {
    flat.segment(p, v.size()) = v;
    p += v.size();
  };
  for (const auto& stage : stages)
    for (const auto& b : stage) {
      for (const auto& w : b.w1) put_vec(w);
      put_vec(b.att.w_q);
      put_vec(b.att.w_k);
      put_vec(b.att.w_v);
      put_vec(b.att.w_o);
      flat[p++] = b.att.b_o;
      for (Eigen::Index r = 0; r < b.w2.rows(); ++r) put_vec(b.w2.row(r));
      put_vec(b.w3);
    }
  return flat;
}

void Model::set_params(const Eigen::VectorXd& flat) {
  if (flat.size() != param_count())
    throw invalid_input("Model::set_params: size mismatch");
  Eigen::Index p = 0;
  auto take = [&](Eigen::Index n) {
    Eigen::VectorXd v = flat.segment(p, n);
    p += n;
    return v;
  };
  for (auto& stage : stages)
    for (auto& b : stage) {
      for (auto& w : b.w1) w = take(w.size());
      b.att.w_q = take(b.att.w_q.size());
      b.att.w_k = take(b.att.w_k.size());
      b.att.w_v = take(b.att.w_v.size());
      b.att.w_o = take(b.att.w_o.size());
      b.att.b_o = flat[p++];
      for (Eigen::Index r = 0; r < b.w2.rows(); ++r)
        b.w2.row(r) = take(b.w2.cols()).transpose();
      b.w3 = take(b.w3.size());
    }
}

ModelConfig build_variant(Variant v, ModelConfig base) {
  switch (v) {
    case Variant::ircnn:
      base.use_multiscale_attention = false;
      base.use_tvd = false;
      break;
    case Variant::ircnn_tvd:
      base.use_multiscale_attention = false;
      base.use_tvd = true;
      break;
    case Variant::ircnn_att:
      base.use_multiscale_attention = true;
      base.use_tvd = false;
      break;
    case Variant::ircnn_plus:
      base.use_multiscale_attention = true;
      base.use_tvd = true;
      break;
  }
  return base;
}

Variant variant_from_string(const std::string& name) {
  if (name == "ircnn") return Variant::ircnn;
  if (name == "ircnn_tvd") return Variant::ircnn_tvd;
  if (name == "ircnn_att") return Variant::ircnn_att;
  if (name == "ircnn_plus") return Variant::ircnn_plus;
  throw invalid_input("unknown variant: " + name);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::ircnn: return "ircnn";
    case Variant::ircnn_tvd: return "ircnn_tvd";
    case Variant::ircnn_att: return "ircnn_att";
    case Variant::ircnn_plus: return "ircnn_plus";
  }
  return "?";
}

Eigen::VectorXd inner_block_forward(const Eigen::VectorXd& x,
                                    const InnerBlockWeights& w,
                                    const ModelConfig& cfg) {
  if (x.size() < cfg.K) throw invalid_input("inner_block_forward: input shorter than K");
  const auto as_kernel = [](const Eigen::VectorXd& v) {
    return Eigen::MatrixXd(v.transpose());
  };
  if (!cfg.use_multiscale_attention) {
    Eigen::VectorXd h =
        nn::activate(nn::conv1d_same(x, as_kernel(w.w1[0]), cfg.pad_mode),
                     cfg.activation);
    return nn::conv1d_same(h, as_kernel(nn::softmax_vec(w.w3)), cfg.pad_mode);
  }
  std::vector<Eigen::VectorXd> parts;
  parts.reserve(cfg.concat_width());
  parts.push_back(x);
  for (int k = 0; k < cfg.n_scales; ++k)
    parts.push_back(nn::activate(
        nn::conv1d_same(x, as_kernel(w.w1[k]), cfg.pad_mode), cfg.activation));
  parts.push_back(nn::attention(x, w.att));
  const Eigen::MatrixXd cat = nn::concat_channels(parts);
  Eigen::VectorXd h =
      nn::activate(nn::conv1d_same(cat, w.w2, cfg.pad_mode), cfg.activation);
  return nn::conv1d_same(h, as_kernel(nn::softmax_vec(w.w3)), cfg.pad_mode);
}

Eigen::VectorXd stage_forward(const Eigen::VectorXd& x0,
                              const std::vector<InnerBlockWeights>& stage,
                              const ModelConfig& cfg,
                              std::vector<Eigen::VectorXd>* trace) {
  if (trace) trace->clear();
  Eigen::VectorXd x = x0;
  for (const auto& block : stage) {
    Eigen::VectorXd avg = inner_block_forward(x, block, cfg);
    if (cfg.inner_update == InnerUpdate::anchored)
      x = x0 - avg;
    else
      x -= avg;
    if (trace) trace->push_back(x);
  }
  return x;
}

ComponentSet decompose(const Eigen::VectorXd& x, const Model& model) {
  model.validate();
  if (x.size() < model.config.K)
    throw invalid_input("decompose: input shorter than K");
  ComponentSet out;
  Eigen::VectorXd residual = x;
  for (const auto& stage : model.stages) {
    Eigen::VectorXd raw = stage_forward(residual, stage, model.config);
    Eigen::VectorXd imf =
        model.config.use_tvd ? tvd_denoise(raw, model.config.tvd) : raw;
    out.components.push_back(imf);
    residual -= imf;
  }
  out.residue = residual;
  return out;
}

ComponentSet decompose(const Signal& x, const Model& model) {
  x.validate();
  return decompose(x.values, model);
}

// --- serialization -----------------------------------------------------------

std::string to_string(InnerUpdate u) {
  return u == InnerUpdate::anchored ? "anchored" : "from_current";
}
std::string to_string(TvdGrad g) {
  return g == TvdGrad::straight_through ? "straight_through" : "none";
}
std::string to_string(nn::Activation a) {
  return a == nn::Activation::tanh ? "tanh" : "relu";
}
std::string to_string(nn::PadMode p) {
  return p == nn::PadMode::zero ? "zero" : "reflect";
}

InnerUpdate inner_update_from_string(const std::string& s) {
  if (s == "anchored") return InnerUpdate::anchored;
  if (s == "from_current") return InnerUpdate::from_current;
  throw invalid_input("unknown inner_update: " + s);
}
TvdGrad tvd_grad_from_string(const std::string& s) {
  if (s == "straight_through") return TvdGrad::straight_through;
  if (s == "none") return TvdGrad::none;
  throw invalid_input("unknown tvd_grad: " + s);
}
nn::Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return nn::Activation::tanh;
  if (s == "relu") return nn::Activation::relu;
  throw invalid_input("unknown activation: " + s);
}
nn::PadMode pad_mode_from_string(const std::string& s) {
  if (s == "zero") return nn::PadMode::zero;
  if (s == "reflect") return nn::PadMode::reflect;
  throw invalid_input("unknown pad_mode: " + s);
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vec_from_json(const json& j, Eigen::Index expect,
                              const std::string& what) {
  if (!j.is_array())
    throw data_error("model document: " + what + " is not an array");
  if (static_cast<Eigen::Index>(j.size()) != expect)
    throw data_error("model document: " + what + " has wrong length");
  Eigen::VectorXd v(expect);
  for (Eigen::Index i = 0; i < expect; ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

std::string serialize(const Model& model) {
  model.validate();
  json doc;
  doc["format"] = "modedec-model";
  doc["version"] = 1;
  json cfg;
  const auto& c = model.config;
  cfg["M"] = c.M;
  cfg["S"] = c.S;
  cfg["K"] = c.K;
  cfg["n_scales"] = c.n_scales;
  cfg["d_att"] = c.d_att;
  cfg["use_multiscale_attention"] = c.use_multiscale_attention;
  cfg["use_tvd"] = c.use_tvd;
  cfg["inner_update"] = to_string(c.inner_update);
  cfg["activation"] = to_string(c.activation);
  cfg["pad_mode"] = to_string(c.pad_mode);
  cfg["tvd_lambda"] = c.tvd.lambda;
  cfg["tvd_nit"] = c.tvd.nit;
  cfg["tvd_grad"] = to_string(c.tvd_grad);
  doc["config"] = cfg;
  json stages = json::array();
  for (const auto& stage : model.stages) {
    json blocks = json::array();
    for (const auto& b : stage) {
      json jb;
      jb["w1"] = json::array();
      for (const auto& w : b.w1) jb["w1"].push_back(vec_to_json(w));
      jb["w_q"] = vec_to_json(b.att.w_q);
      jb["w_k"] = vec_to_json(b.att.w_k);
      jb["w_v"] = vec_to_json(b.att.w_v);
      jb["w_o"] = vec_to_json(b.att.w_o);
      jb["b_o"] = b.att.b_o;
      json w2 = json::array();
      for (Eigen::Index r = 0; r < b.w2.rows(); ++r)
        w2.push_back(vec_to_json(b.w2.row(r)));
      jb["w2"] = w2;
      jb["w3"] = vec_to_json(b.w3);
      blocks.push_back(std::move(jb));
    }
    stages.push_back(std::move(blocks));
  }
  doc["stages"] = std::move(stages);
  return doc.dump(1);
}

Model deserialize(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw data_error(std::string("model document: malformed JSON: ") + e.what());
  }
  try {
    if (doc.value("format", "") != "modedec-model")
      throw data_error("model document: unrecognized format");
    if (doc.value("version", -1) != 1)
      throw data_error("model document: unsupported version");
    const json& cfg = doc.at("config");
    ModelConfig c;
    c.M = cfg.at("M").get<int>();
    c.S = cfg.at("S").get<int>();
    c.K = cfg.at("K").get<int>();
    c.n_scales = cfg.at("n_scales").get<int>();
    c.d_att = cfg.at("d_att").get<int>();
    c.use_multiscale_attention = cfg.at("use_multiscale_attention").get<bool>();
    c.use_tvd = cfg.at("use_tvd").get<bool>();
    const std::string iu = cfg.at("inner_update").get<std::string>();
    if (iu == "anchored")
      c.inner_update = InnerUpdate::anchored;
    else if (iu == "from_current")
      c.inner_update = InnerUpdate::from_current;
    else
      throw data_error("model document: unknown inner_update");
    const std::string act = cfg.at("activation").get<std::string>();
    if (act == "tanh")
      c.activation = nn::Activation::tanh;
    else if (act == "relu")
      c.activation = nn::Activation::relu;
    else
      throw data_error("model document: unknown activation");
    const std::string pm = cfg.at("pad_mode").get<std::string>();
    if (pm == "zero")
      c.pad_mode = nn::PadMode::zero;
    else if (pm == "reflect")
      c.pad_mode = nn::PadMode::reflect;
    else
      throw data_error("model document: unknown pad_mode");
    c.tvd.lambda = cfg.at("tvd_lambda").get<double>();
    c.tvd.nit = cfg.at("tvd_nit").get<int>();
    const std::string tg = cfg.at("tvd_grad").get<std::string>();
    if (tg == "straight_through")
      c.tvd_grad = TvdGrad::straight_through;
    else if (tg == "none")
      c.tvd_grad = TvdGrad::none;
    else
      throw data_error("model document: unknown tvd_grad");
    c.validate();

    const json& stages = doc.at("stages");
    if (static_cast<int>(stages.size()) != c.M)
      throw data_error("model document: stage count does not match config");
    Model m;
    m.config = c;
    m.stages.resize(c.M);
    for (int mi = 0; mi < c.M; ++mi) {
      const json& blocks = stages[mi];
      if (static_cast<int>(blocks.size()) != c.S)
        throw data_error("model document: block count does not match config");
      m.stages[mi].resize(c.S);
      for (int si = 0; si < c.S; ++si) {
        const json& jb = blocks[si];
        InnerBlockWeights& b = m.stages[mi][si];
        const json& w1 = jb.at("w1");
        if (static_cast<int>(w1.size()) != c.n_scales)
          throw data_error("model document: w1 scale count mismatch");
        b.w1.resize(c.n_scales);
        for (int k = 0; k < c.n_scales; ++k)
          b.w1[k] = vec_from_json(w1[k], c.scale_len(k), "w1");
        b.att.w_q = vec_from_json(jb.at("w_q"), c.d_att, "w_q");
        b.att.w_k = vec_from_json(jb.at("w_k"), c.d_att, "w_k");
        b.att.w_v = vec_from_json(jb.at("w_v"), c.d_att, "w_v");
        b.att.w_o = vec_from_json(jb.at("w_o"), c.d_att, "w_o");
        b.att.b_o = jb.at("b_o").get<double>();
        const json& w2 = jb.at("w2");
        if (static_cast<int>(w2.size()) != c.concat_width())
          throw data_error("model document: w2 row count mismatch");
        b.w2 = Eigen::MatrixXd(c.concat_width(), c.K);
        for (int r = 0; r < c.concat_width(); ++r)
          b.w2.row(r) = vec_from_json(w2[r], c.K, "w2").transpose();
        b.w3 = vec_from_json(jb.at("w3"), c.K, "w3");
      }
    }
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw data_error(std::string("model document: ") + e.what());
  } catch (const invalid_input& e) {
    throw data_error(std::string("model document: ") + e.what());
  }
}

// --- tape mirror -------------------------------------------------------------

TapeModel make_tape_model(ad::Tape& tape, const Model& model) {
  TapeModel tm;
  tm.stages.resize(model.stages.size());
  for (std::size_t m = 0; m < model.stages.size(); ++m) {
    for (const auto& b : model.stages[m]) {
      TapeBlock tb;
      for (const auto& w : b.w1)
        tb.w1.push_back(tape.leaf(Eigen::MatrixXd(w.transpose())));
      tb.w_q = tape.leaf(Eigen::MatrixXd(b.att.w_q));
      tb.w_k = tape.leaf(Eigen::MatrixXd(b.att.w_k));
      tb.w_v = tape.leaf(Eigen::MatrixXd(b.att.w_v));
      tb.w_o = tape.leaf(Eigen::MatrixXd(b.att.w_o));
      tb.b_o = tape.leaf(b.att.b_o);
      tb.w2 = tape.leaf(b.w2);
      tb.w3 = tape.leaf(Eigen::MatrixXd(b.w3));
      tm.stages[m].push_back(std::move(tb));
    }
  }
  return tm;
}

Eigen::VectorXd gather_grads(const ad::Tape& tape, const TapeModel& tm,
                             const Model& model) {
  Eigen::VectorXd flat(model.param_count());
  Eigen::Index p = 0;
  auto put = [&](const Eigen::MatrixXd& g, bool row_major = false) {
    if (row_major) {
      for (Eigen::Index r = 0; r < g.rows(); ++r)
        for (Eigen::Index c = 0; c < g.cols(); ++c) flat[p++] = g(r, c);
    } else {
      flat.segment(p, g.size()) =
          Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
      p += g.size();
    }
  };
  for (const auto& stage : tm.stages)
    for (const auto& tb : stage) {
      for (auto v : tb.w1) put(tape.grad(v));
      put(tape.grad(tb.w_q));
      put(tape.grad(tb.w_k));
      put(tape.grad(tb.w_v));
      put(tape.grad(tb.w_o));
      put(tape.grad(tb.b_o));
      put(tape.grad(tb.w2), /*row_major=*/true);
      put(tape.grad(tb.w3));
    }
  return flat;
}

namespace {

ad::Tape::Var block_forward_on_tape(ad::Tape& tape, const TapeBlock& tb,
                                    const ModelConfig& cfg, ad::Tape::Var x) {
  // w1 kernels live on the tape as 1 x L matrices; w3 as K x 1 for softmax.
  auto w3_kernel = tape.transpose(tape.softmax_vec(tb.w3));
  if (!cfg.use_multiscale_attention) {
    auto h = tape.activation(tape.conv1d_same(x, tb.w1[0], cfg.pad_mode),
                             cfg.activation);
    return tape.conv1d_same(h, w3_kernel, cfg.pad_mode);
  }
  std::vector<ad::Tape::Var> parts;
  parts.push_back(x);
  for (auto w : tb.w1)
    parts.push_back(tape.activation(tape.conv1d_same(x, w, cfg.pad_mode),
                                    cfg.activation));
  parts.push_back(tape.attention(x, tb.w_q, tb.w_k, tb.w_v, tb.w_o, tb.b_o));
  auto cat = tape.concat(parts);
  auto h = tape.activation(tape.conv1d_same(cat, tb.w2, cfg.pad_mode),
                           cfg.activation);
  return tape.conv1d_same(h, w3_kernel, cfg.pad_mode);
}

}  // namespace

TapeComponents decompose_on_tape(ad::Tape& tape, const TapeModel& tm,
                                 const ModelConfig& cfg, ad::Tape::Var input) {
  TapeComponents out;
  ad::Tape::Var residual = input;
  for (const auto& stage : tm.stages) {
    ad::Tape::Var x = residual;
    for (const auto& tb : stage) {
      auto avg = block_forward_on_tape(tape, tb, cfg, x);
      x = cfg.inner_update == InnerUpdate::anchored ? tape.sub(residual, avg)
                                                    : tape.sub(x, avg);
    }
    ad::Tape::Var imf = x;
    if (cfg.use_tvd && cfg.tvd_grad == TvdGrad::straight_through)
      imf = tape.tvd_straight_through(x, cfg.tvd);
    out.components.push_back(imf);
    residual = tape.sub(residual, imf);
  }
  out.residue = residual;
  return out;
}

ad::Tape::Var example_loss_on_tape(ad::Tape& tape, const TapeModel& tm,
                                   const ModelConfig& cfg,
                                   const Eigen::VectorXd& feature,
                                   const std::vector<Eigen::VectorXd>& labels,
                                   double eta_qtv) {
  if (static_cast<int>(labels.size()) != cfg.M)
    throw invalid_input("example_loss_on_tape: label count != M");
  auto input = tape.leaf(Eigen::MatrixXd(feature));
  auto comps = decompose_on_tape(tape, tm, cfg, input);
  ad::Tape::Var loss = -1;
  for (int m = 0; m < cfg.M; ++m) {
    auto lbl = tape.leaf(Eigen::MatrixXd(labels[m]));
    auto term = tape.sum_sq(tape.sub(comps.components[m], lbl));
    loss = loss < 0 ? term : tape.add(loss, term);
    if (eta_qtv > 0.0) {
      auto qtv = tape.scale(tape.sum_sq(tape.diff(comps.components[m])), eta_qtv);
      loss = tape.add(loss, qtv);
    }
  }
  return loss;
}

}  // namespace modedec
