#include "diagnet/model.hpp"

#include <json.hpp>

namespace diagnet {

void ModelConfig::check() const {
  if (!use_diagram && !use_topology && !use_text) throw std::invalid_argument("no branch enabled");
  for (std::size_t d : {dim_diagram, dim_topology, dim_text, reducer_hidden, fused_dim, num_classes, embedding_dim}) {
    if (d == 0) throw std::invalid_argument("model dimensions must be >= 1");
  }
  if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (input_side < 4 || input_side % 4 != 0) {
    throw std::invalid_argument("input_side must be a positive multiple of 4");
  }
}

std::size_t ModelConfig::concat_dim() const {
  return (use_diagram ? dim_diagram : 0) + (use_text ? dim_text : 0) + (use_topology ? dim_topology : 0);
}

std::string ModelConfig::variant_name() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += "+";
    out += name;
  };
  add(use_diagram, "diagram");
  add(use_topology, "topology");
  add(use_text, "text");
  return out;
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["use_diagram"] = use_diagram;
  j["use_topology"] = use_topology;
  j["use_text"] = use_text;
  j["dim_diagram"] = dim_diagram;
  j["dim_topology"] = dim_topology;
  j["dim_text"] = dim_text;
  j["reducer_hidden"] = reducer_hidden;
  j["fused_dim"] = fused_dim;
  j["input_side"] = input_side;
  j["num_classes"] = num_classes;
  j["embedding_dim"] = embedding_dim;
  j["topology_mode"] = topology_mode == RenderMode::DirectedAware ? "directed-aware" : "undirected-only";
  return j.dump();
}

ModelConfig ModelConfig::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  ModelConfig c;
  c.use_diagram = j.at("use_diagram").get<bool>();
  c.use_topology = j.at("use_topology").get<bool>();
  c.use_text = j.at("use_text").get<bool>();
  c.dim_diagram = j.at("dim_diagram").get<std::size_t>();
  c.dim_topology = j.at("dim_topology").get<std::size_t>();
  c.dim_text = j.at("dim_text").get<std::size_t>();
  c.reducer_hidden = j.at("reducer_hidden").get<std::size_t>();
  c.fused_dim = j.at("fused_dim").get<std::size_t>();
  c.input_side = j.at("input_side").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  const auto mode = j.at("topology_mode").get<std::string>();
  if (mode == "directed-aware") {
    c.topology_mode = RenderMode::DirectedAware;
  } else if (mode == "undirected-only") {
    c.topology_mode = RenderMode::UndirectedOnly;
  } else {
    throw std::invalid_argument("unknown topology_mode " + mode);
  }
  c.check();
  return c;
}

ModelInputs prepare_inputs(const Example& e, const ModelConfig& cfg, const EmbeddingTable& table, bool invert) {
  ModelInputs in;
  const int side = static_cast<int>(cfg.input_side);
  if (cfg.use_diagram) in.diagram = to_input(e.diagram, side, invert);
  if (cfg.use_topology) in.topology = to_input(render_topology(e.annotation, cfg.topology_mode), side, false);
  if (cfg.use_text) {
    const auto tokens = text_tokens(e.annotation);
    in.text = embed_text(tokens, table, cfg.embedding_dim);
  }
  return in;
}

Sequential FusionModel::make_visual(std::size_t side, std::size_t hidden, std::size_t out) {
  Sequential s;
  s.add(Conv2d(1, 8));
  s.add(Relu());
  s.add(MaxPool2());
  s.add(Conv2d(8, 16));
  s.add(Relu());
  s.add(MaxPool2());
  s.add(Flatten());
  s.add(Linear(16 * (side / 4) * (side / 4), hidden));
  s.add(Relu());
  s.add(Linear(hidden, out));
  s.add(Relu());
  return s;
}

FusionModel::FusionModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.check();
  if (cfg_.use_diagram) diagram_ = make_visual(cfg_.input_side, cfg_.reducer_hidden, cfg_.dim_diagram);
  if (cfg_.use_topology) topology_ = make_visual(cfg_.input_side, cfg_.reducer_hidden, cfg_.dim_topology);
  if (cfg_.use_text) {
    text_ = Sequential({Linear(cfg_.embedding_dim, cfg_.reducer_hidden), Relu(),
                        Linear(cfg_.reducer_hidden, cfg_.dim_text), Relu()});
  }
  fusion_ = Sequential({Linear(cfg_.concat_dim(), cfg_.fused_dim), Relu()});
  classifier_ = Sequential({Linear(cfg_.fused_dim, cfg_.num_classes)});

  // Each component draws from its own stream so that enabling or disabling a
  // branch leaves the others' initial weights unchanged.
  auto init = [&](Sequential& s, std::uint64_t stream) {
    Rng rng(mix_seed(seed, stream));
    s.init(rng);
  };
  if (diagram_) init(*diagram_, 1);
  if (topology_) init(*topology_, 2);
  if (text_) init(*text_, 3);
  init(fusion_, 4);
  init(classifier_, 5);
}

namespace {

void require_input(const Tensor& t, const Shape& s, const char* what) {
  if (t.shape() != s) {
    throw ShapeError(std::string(what) + ": expected shape " + shape_string(s) + ", got " + shape_string(t.shape()));
  }
}

}  // namespace

Tensor FusionModel::diagram_features(const Tensor& x) {
  if (!diagram_) throw std::logic_error("diagram branch is disabled");
  require_input(x, {1, cfg_.input_side, cfg_.input_side}, "diagram branch input");
  return diagram_->forward(x);
}

Tensor FusionModel::topology_features(const Tensor& x) {
  if (!topology_) throw std::logic_error("topology branch is disabled");
  require_input(x, {1, cfg_.input_side, cfg_.input_side}, "topology branch input");
  return topology_->forward(x);
}

Tensor FusionModel::text_features(const Tensor& x_t) {
  if (!text_) throw std::logic_error("text branch is disabled");
  require_input(x_t, {cfg_.embedding_dim}, "text branch input");
  return text_->forward(x_t);
}

Tensor FusionModel::fuse_logits(const Tensor& v_diagram, const Tensor& v_text, const Tensor& v_topology) {
  std::vector<const Tensor*> parts;
  if (cfg_.use_diagram) parts.push_back(&v_diagram);
  if (cfg_.use_text) parts.push_back(&v_text);
  if (cfg_.use_topology) parts.push_back(&v_topology);
  if (parts.empty()) throw std::logic_error("no branch enabled");
  const Tensor r = fusion_.forward(concat(parts));
  return classifier_.forward(r);
}

Tensor FusionModel::logits(const ModelInputs& in) {
  const Tensor vd = cfg_.use_diagram ? diagram_features(in.diagram) : Tensor();
  const Tensor vt = cfg_.use_text ? text_features(in.text) : Tensor();
  const Tensor vl = cfg_.use_topology ? topology_features(in.topology) : Tensor();
  return fuse_logits(vd, vt, vl);
}

Tensor FusionModel::forward(const ModelInputs& in) { return softmax(logits(in)); }

ModelInputs FusionModel::backward(const Tensor& grad_logits, bool need_input_grad) {
  const Tensor g_r = classifier_.backward(grad_logits);
  const Tensor g_cat = fusion_.backward(g_r);
  ModelInputs grads;
  std::size_t offset = 0;
  auto slice = [&](std::size_t n) {
    std::vector<double> v(g_cat.data().begin() + static_cast<std::ptrdiff_t>(offset),
                          g_cat.data().begin() + static_cast<std::ptrdiff_t>(offset + n));
    offset += n;
    return Tensor({n}, std::move(v));
  };
  if (diagram_) grads.diagram = diagram_->backward(slice(cfg_.dim_diagram), need_input_grad);
  if (text_) grads.text = text_->backward(slice(cfg_.dim_text), need_input_grad);
  if (topology_) grads.topology = topology_->backward(slice(cfg_.dim_topology), need_input_grad);
  return grads;
}

std::vector<Param*> FusionModel::params() {
  std::vector<Param*> out;
  auto add = [&](Sequential& s) {
    for (Param* p : s.params()) out.push_back(p);
  };
  if (diagram_) add(*diagram_);
  if (topology_) add(*topology_);
  if (text_) add(*text_);
  add(fusion_);
  add(classifier_);
  return out;
}

std::vector<Param*> FusionModel::text_params() { return text_ ? text_->params() : std::vector<Param*>{}; }

void FusionModel::zero_grad() {
  for (Param* p : params()) p->grad.fill(0.0);
}

std::size_t FusionModel::param_count() {
  std::size_t n = 0;
  for (Param* p : params()) n += p->value.size();
  return n;
}

std::string FusionModel::save() { return cfg_.to_json() + "\n" + write_params(params()); }

FusionModel FusionModel::load(std::string_view text) {
  const auto nl = text.find('\n');
  if (nl == std::string_view::npos) throw std::runtime_error("model checkpoint has no config header");
  FusionModel m(ModelConfig::from_json(text.substr(0, nl)), 0);
  read_params(text.substr(nl + 1), m.params());
  return m;
}

Tensor model_forward(const Example& e, FusionModel& model, const EmbeddingTable& table, bool invert) {
  return model.forward(prepare_inputs(e, model.config(), table, invert));
}

GradCheckReport grad_check_model(FusionModel& model, const ModelInputs& inputs, std::size_t target, double eps) {
  model.zero_grad();
  const LossResult lr = softmax_cross_entropy(model.logits(inputs), target);
  const ModelInputs in_grad = model.backward(lr.grad, true);

  ModelInputs x = inputs;
  auto loss = [&] { return softmax_cross_entropy(model.logits(x), target).loss; };

  GradCheckReport report;
  for (Param* p : model.params()) {
    const std::vector<double> analytic(p->grad.data().begin(), p->grad.data().end());
    report.max_param_error = std::max(report.max_param_error, check_gradient(loss, p->value.data(), analytic, eps));
  }
  auto check_input = [&](Tensor& t, const Tensor& g) {
    if (t.size() == 0) return;
    const std::vector<double> analytic(g.data().begin(), g.data().end());
    report.max_input_error = std::max(report.max_input_error, check_gradient(loss, t.data(), analytic, eps));
  };
  check_input(x.diagram, in_grad.diagram);
  check_input(x.text, in_grad.text);
  check_input(x.topology, in_grad.topology);
  return report;
}

}  // namespace diagnet

namespace diagnet {

namespace {

Tensor random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(s));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

std::vector<GradCheckCase> gradcheck_suite(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x67726164ULL));
  std::vector<GradCheckCase> out;
  auto layer_case = [&](const std::string& name, Sequential net, const Tensor& x, double threshold) {
    net.init(rng);
    // Nonzero biases so the check also covers their gradients away from zero.
    for (Param* p : net.params()) {
      if (p->value.rank() == 1) {
        for (auto& v : p->value.data()) v = rng.uniform(-0.5, 0.5);
      }
    }
    const std::size_t classes = net.forward(x).size();
    const GradCheckReport r = grad_check(net, x, rng.below(classes));
    out.push_back({name, r.max_error(), threshold});
  };

  layer_case("linear", Sequential({Linear(7, 5)}), random_tensor({7}, rng), 1e-7);
  layer_case("relu", Sequential({Relu()}), random_tensor({9}, rng), 1e-7);
  layer_case("conv2d", Sequential({Conv2d(2, 3), Flatten()}), random_tensor({2, 6, 6}, rng), 1e-4);
  layer_case("maxpool2", Sequential({MaxPool2(), Flatten()}), random_tensor({2, 6, 6}, rng), 1e-4);
  layer_case("flatten", Sequential({Flatten()}), random_tensor({2, 3, 2}, rng), 1e-4);

  ModelConfig cfg;
  cfg.input_side = 16;
  cfg.dim_diagram = cfg.dim_topology = cfg.dim_text = 8;
  cfg.reducer_hidden = 8;
  cfg.fused_dim = 8;
  cfg.embedding_dim = 6;
  FusionModel model(cfg, rng.next());
  for (Param* p : model.params()) {
    if (p->value.rank() == 1) {
      for (auto& v : p->value.data()) v = rng.uniform(0.0, 0.2);
    }
  }
  ModelInputs in;
  in.diagram = random_tensor({1, 16, 16}, rng, 0.0, 1.0);
  in.topology = random_tensor({1, 16, 16}, rng, 0.0, 1.0);
  in.text = random_tensor({6}, rng);
  const GradCheckReport r = grad_check_model(model, in, rng.below(cfg.num_classes));
  out.push_back({"end-to-end", r.max_error(), 1e-4});
  return out;
}

}  // namespace diagnet
