#include "equisym/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "equisym/errors.hpp"

namespace equisym {

std::string to_string(Heads heads) {
  switch (heads) {
    case Heads::ref:
      return "ref";
    case Heads::rot:
      return "rot";
    case Heads::joint:
      return "joint";
  }
  return "joint";
}

Heads heads_from_string(const std::string& name) {
  if (name == "ref") return Heads::ref;
  if (name == "rot") return Heads::rot;
  if (name == "joint") return Heads::joint;
  throw UsageError("unknown heads '" + name + "' (expected ref, rot or joint)");
}

// ---------------------------------------------------------------------------
// ModelConfig

ModelConfig ModelConfig::desk() {
  ModelConfig cfg;
  cfg.group_order = 4;
  return cfg;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig cfg;
  cfg.group_order = 4;
  cfg.stage_multiplicities = {1, 1};
  cfg.blocks_per_stage = 1;
  cfg.aspp_dilation_rates = {1, 2};
  cfg.aspp_multiplicity = 1;
  cfg.decoder_multiplicity = 1;
  cfg.n_ref = 2;
  cfg.n_rot = 2;
  cfg.min_input = 8;
  return cfg;
}

void ModelConfig::validate() const {
  if (group_order < 1) throw UsageError("group order must be positive");
  if (stage_multiplicities.empty()) throw UsageError("at least one encoder stage is required");
  for (int m : stage_multiplicities)
    if (m < 1) throw UsageError("stage multiplicities must be positive");
  if (blocks_per_stage < 1) throw UsageError("blocks per stage must be positive");
  if (aspp_dilation_rates.empty()) throw UsageError("ASPP needs at least one branch");
  for (int r : aspp_dilation_rates)
    if (r < 1) throw UsageError("ASPP dilation rates must be positive");
  if (aspp_multiplicity < 1 || decoder_multiplicity < 1) throw UsageError("ASPP and decoder widths must be positive");
  if (n_ref < 1 || n_rot < 1) throw UsageError("class counts must be positive");
  if (group_order == 8 && n_ref != 8) throw UsageError("n_ref must equal the group order 8");
  if (min_input < 1) throw UsageError("min_input must be positive");
}

int ModelConfig::output_stride() const {
  const int pools = std::min(static_cast<int>(stage_multiplicities.size()) - 1, 3);
  return 1 << pools;
}

int ModelConfig::plain_channels(int multiplicity) const {
  return static_cast<int>(std::lround(multiplicity * std::sqrt(2.0 * group_order)));
}

namespace {

std::string join(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

int parse_int(const std::string& key, const std::string& text) {
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw DataError("model config: bad integer for " + key + ": '" + text + "'");
  return value;
}

std::vector<int> parse_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, item));
  return out;
}

}  // namespace

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  out << "group_order=" << group_order << '\n'
      << "stage_multiplicities=" << join(stage_multiplicities) << '\n'
      << "blocks_per_stage=" << blocks_per_stage << '\n'
      << "aspp_dilation_rates=" << join(aspp_dilation_rates) << '\n'
      << "aspp_multiplicity=" << aspp_multiplicity << '\n'
      << "decoder_multiplicity=" << decoder_multiplicity << '\n'
      << "n_ref=" << n_ref << '\n'
      << "n_rot=" << n_rot << '\n'
      << "heads=" << to_string(heads) << '\n'
      << "plain=" << (plain ? 1 : 0) << '\n'
      << "min_input=" << min_input << '\n';
  return out.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("model config: expected key=value, got '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "group_order") cfg.group_order = parse_int(key, value);
    else if (key == "stage_multiplicities") cfg.stage_multiplicities = parse_list(key, value);
    else if (key == "blocks_per_stage") cfg.blocks_per_stage = parse_int(key, value);
    else if (key == "aspp_dilation_rates") cfg.aspp_dilation_rates = parse_list(key, value);
    else if (key == "aspp_multiplicity") cfg.aspp_multiplicity = parse_int(key, value);
    else if (key == "decoder_multiplicity") cfg.decoder_multiplicity = parse_int(key, value);
    else if (key == "n_ref") cfg.n_ref = parse_int(key, value);
    else if (key == "n_rot") cfg.n_rot = parse_int(key, value);
    else if (key == "heads") cfg.heads = heads_from_string(value);
    else if (key == "plain") cfg.plain = parse_int(key, value) != 0;
    else if (key == "min_input") cfg.min_input = parse_int(key, value);
    else throw DataError("model config: unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// helpers

namespace {

FieldType feature_type(const ModelConfig& cfg, const DihedralGroup& group, int multiplicity) {
  return cfg.plain ? FieldType::trivial(group, cfg.plain_channels(multiplicity)) : FieldType::regular(group, multiplicity);
}

template <typename Scalar>
std::unique_ptr<SteerableConv<Scalar>> make_conv(const FieldType& in, const FieldType& out, int k, int dilation,
                                                 bool plain, bool bias, std::mt19937_64& rng) {
  ExpansionRule rule = ExpansionRule::unconstrained;
  if (!plain) {
    if (in.all(Representation::trivial) && out.all(Representation::regular)) rule = ExpansionRule::lifting;
    else if (in.all(Representation::regular) && out.all(Representation::regular)) rule = ExpansionRule::group_to_group;
    else if (in.all(Representation::trivial) && out.all(Representation::trivial) && k == 1)
      rule = ExpansionRule::trivial_pointwise;
    else throw UsageError("no equivariant expansion from " + in.describe() + " to " + out.describe());
  }
  auto conv = std::make_unique<SteerableConv<Scalar>>(SteerableKernelSpec{in, out, k, rule}, 1, dilation, bias);
  conv->init_he(rng);
  return conv;
}

template <typename Scalar>
FeatureField<Scalar> add_fields(FeatureField<Scalar> a, const FeatureField<Scalar>& b) {
  a.data += b.data;
  return a;
}

}  // namespace

// ---------------------------------------------------------------------------
// Module / Sequential

template <typename Scalar>
FeatureField<Scalar> Module<Scalar>::run(const std::string& name, Layer<Scalar>& layer, const Field& x) {
  if (trace_ && !dynamic_cast<Module<Scalar>*>(&layer)) trace_->push_back({trace_prefix_ + name, &layer, x});
  return layer.forward(x);
}

template <typename Scalar>
Layer<Scalar>& Sequential<Scalar>::add(std::string name, std::unique_ptr<Layer<Scalar>> layer) {
  layers_.emplace_back(std::move(name), std::move(layer));
  return *layers_.back().second;
}

template <typename Scalar>
FeatureField<Scalar> Sequential<Scalar>::forward(const Field& x) {
  if (layers_.empty()) return x;
  Field h = this->run(layers_[0].first, *layers_[0].second, x);
  for (std::size_t i = 1; i < layers_.size(); ++i) h = this->run(layers_[i].first, *layers_[i].second, h);
  return h;
}

template <typename Scalar>
FeatureField<Scalar> Sequential<Scalar>::backward(const Field& grad_out) {
  if (layers_.empty()) return grad_out;
  Field g = layers_.back().second->backward(grad_out);
  for (std::size_t i = layers_.size() - 1; i-- > 0;) g = layers_[i].second->backward(g);
  return g;
}

template <typename Scalar>
void Sequential<Scalar>::collect_parameters(const std::string& prefix, std::vector<NamedParameter<Scalar>>& out) {
  for (auto& [name, layer] : layers_) layer->collect_parameters(prefix + name + ".", out);
}

template <typename Scalar>
void Sequential<Scalar>::collect_buffers(const std::string& prefix, std::vector<NamedBuffer<Scalar>>& out) {
  for (auto& [name, layer] : layers_) layer->collect_buffers(prefix + name + ".", out);
}

template <typename Scalar>
void Sequential<Scalar>::set_training(bool training) {
  for (auto& entry : layers_) entry.second->set_training(training);
}

template <typename Scalar>
void Sequential<Scalar>::set_trace(std::vector<LayerTrace<Scalar>>* trace, const std::string& prefix) {
  Module<Scalar>::set_trace(trace, prefix);
  for (auto& [name, layer] : layers_)
    if (auto* m = dynamic_cast<Module<Scalar>*>(layer.get())) m->set_trace(trace, prefix + name + ".");
}

// ---------------------------------------------------------------------------
// ResidualBlock

template <typename Scalar>
ResidualBlock<Scalar>::ResidualBlock(const FieldType& in, const FieldType& out, int dilation, bool plain,
                                     std::mt19937_64& rng) {
  conv1_ = make_conv<Scalar>(in, out, 3, dilation, plain, false, rng);
  norm1_ = std::make_unique<EquiNorm<Scalar>>(out);
  conv2_ = make_conv<Scalar>(out, out, 3, dilation, plain, false, rng);
  norm2_ = std::make_unique<EquiNorm<Scalar>>(out);
  if (!(in == out)) proj_ = make_conv<Scalar>(in, out, 1, 1, plain, true, rng);
}

template <typename Scalar>
FeatureField<Scalar> ResidualBlock<Scalar>::forward(const Field& x) {
  Field h = this->run("conv1", *conv1_, x);
  h = this->run("norm1", *norm1_, h);
  h = this->run("relu1", relu1_, h);
  h = this->run("conv2", *conv2_, h);
  h = this->run("norm2", *norm2_, h);
  if (proj_) h.data += this->run("proj", *proj_, x).data;
  else h.data += x.data;
  return this->run("relu", relu_out_, h);
}

template <typename Scalar>
FeatureField<Scalar> ResidualBlock<Scalar>::backward(const Field& grad_out) {
  const Field g = relu_out_.backward(grad_out);
  Field gx = conv1_->backward(norm1_->backward(relu1_.backward(conv2_->backward(norm2_->backward(g)))));
  if (proj_) gx.data += proj_->backward(g).data;
  else gx.data += g.data;
  return gx;
}

template <typename Scalar>
void ResidualBlock<Scalar>::collect_parameters(const std::string& prefix, std::vector<NamedParameter<Scalar>>& out) {
  conv1_->collect_parameters(prefix + "conv1.", out);
  norm1_->collect_parameters(prefix + "norm1.", out);
  conv2_->collect_parameters(prefix + "conv2.", out);
  norm2_->collect_parameters(prefix + "norm2.", out);
  if (proj_) proj_->collect_parameters(prefix + "proj.", out);
}

template <typename Scalar>
void ResidualBlock<Scalar>::collect_buffers(const std::string& prefix, std::vector<NamedBuffer<Scalar>>& out) {
  norm1_->collect_buffers(prefix + "norm1.", out);
  norm2_->collect_buffers(prefix + "norm2.", out);
}

template <typename Scalar>
void ResidualBlock<Scalar>::set_training(bool training) {
  norm1_->set_training(training);
  norm2_->set_training(training);
}

// ---------------------------------------------------------------------------
// Aspp

template <typename Scalar>
Aspp<Scalar>::Aspp(const FieldType& in, const FieldType& out, const std::vector<int>& rates, bool plain,
                   std::mt19937_64& rng) {
  for (int rate : rates) {
    Sequential<Scalar> branch;
    const int k = rate == 1 ? 1 : 3;
    branch.add("conv", make_conv<Scalar>(in, out, k, rate, plain, false, rng));
    branch.emplace("norm", EquiNorm<Scalar>(out));
    branch.emplace("relu", ReLU<Scalar>());
    branches_.push_back(std::move(branch));
    branch_types_.push_back(out);
  }
  Sequential<Scalar> pool;
  pool.emplace("gap", GlobalAvgPool<Scalar>());
  pool.add("conv", make_conv<Scalar>(in, out, 1, 1, plain, true, rng));
  pool.emplace("relu", ReLU<Scalar>());
  pool.emplace("broadcast", Broadcast<Scalar>());
  branches_.push_back(std::move(pool));
  branch_types_.push_back(out);

  FieldType cat = branch_types_[0];
  for (std::size_t i = 1; i < branch_types_.size(); ++i) cat = cat + branch_types_[i];
  fuse_.add("conv", make_conv<Scalar>(cat, out, 1, 1, plain, false, rng));
  fuse_.emplace("norm", EquiNorm<Scalar>(out));
  fuse_.emplace("relu", ReLU<Scalar>());
}

template <typename Scalar>
FeatureField<Scalar> Aspp<Scalar>::forward(const Field& x) {
  auto& pool = branches_.back();
  static_cast<Broadcast<Scalar>&>(pool.at(pool.size() - 1)).set_target(x.height, x.width);
  std::vector<Field> outs;
  outs.reserve(branches_.size());
  for (auto& branch : branches_) outs.push_back(branch.forward(x));
  std::vector<const Field*> parts;
  for (const auto& o : outs) parts.push_back(&o);
  return fuse_.forward(concat_channels(parts));
}

template <typename Scalar>
FeatureField<Scalar> Aspp<Scalar>::backward(const Field& grad_out) {
  const auto grads = split_channels(fuse_.backward(grad_out), branch_types_);
  Field gx = branches_[0].backward(grads[0]);
  for (std::size_t i = 1; i < branches_.size(); ++i) gx.data += branches_[i].backward(grads[i]).data;
  return gx;
}

template <typename Scalar>
void Aspp<Scalar>::collect_parameters(const std::string& prefix, std::vector<NamedParameter<Scalar>>& out) {
  for (std::size_t i = 0; i < branches_.size(); ++i)
    branches_[i].collect_parameters(prefix + "branch" + std::to_string(i) + ".", out);
  fuse_.collect_parameters(prefix + "fuse.", out);
}

template <typename Scalar>
void Aspp<Scalar>::collect_buffers(const std::string& prefix, std::vector<NamedBuffer<Scalar>>& out) {
  for (std::size_t i = 0; i < branches_.size(); ++i)
    branches_[i].collect_buffers(prefix + "branch" + std::to_string(i) + ".", out);
  fuse_.collect_buffers(prefix + "fuse.", out);
}

template <typename Scalar>
void Aspp<Scalar>::set_training(bool training) {
  for (auto& b : branches_) b.set_training(training);
  fuse_.set_training(training);
}

template <typename Scalar>
void Aspp<Scalar>::set_trace(std::vector<LayerTrace<Scalar>>* trace, const std::string& prefix) {
  Module<Scalar>::set_trace(trace, prefix);
  for (std::size_t i = 0; i < branches_.size(); ++i)
    branches_[i].set_trace(trace, prefix + "branch" + std::to_string(i) + ".");
  fuse_.set_trace(trace, prefix + "fuse.");
}

// ---------------------------------------------------------------------------
// foreground pooling

template <typename Scalar>
FeatureField<Scalar> foreground_pool(const FeatureField<Scalar>& s) {
  const int c = s.channels();
  if (c < 2) throw UsageError("foreground_pool: need at least one foreground and one background channel");
  FeatureField<Scalar> p(FieldType::trivial(s.type.group(), 1), s.height, s.width);
  for (int i = 0; i < s.pixels(); ++i) {
    double mx = s.data(0, i);
    for (int k = 1; k < c; ++k) mx = std::max(mx, static_cast<double>(s.data(k, i)));
    double total = 0.0, fg = 0.0;
    for (int k = 0; k < c; ++k) {
      const double e = std::exp(static_cast<double>(s.data(k, i)) - mx);
      total += e;
      if (k < c - 1) fg += e;
    }
    p.data(0, i) = static_cast<Scalar>(fg / total);
  }
  return p;
}

template <typename Scalar>
FeatureField<Scalar> foreground_pool_backward(const FeatureField<Scalar>& s, const FeatureField<Scalar>& grad_p) {
  const int c = s.channels();
  FeatureField<Scalar> g(s.type, s.height, s.width);
  std::vector<double> q(static_cast<std::size_t>(c));
  for (int i = 0; i < s.pixels(); ++i) {
    double mx = s.data(0, i);
    for (int k = 1; k < c; ++k) mx = std::max(mx, static_cast<double>(s.data(k, i)));
    double total = 0.0;
    for (int k = 0; k < c; ++k) total += q[k] = std::exp(static_cast<double>(s.data(k, i)) - mx);
    double p = 0.0;
    for (int k = 0; k < c; ++k) {
      q[k] /= total;
      if (k < c - 1) p += q[k];
    }
    const double gp = grad_p.data(0, i);
    for (int k = 0; k < c; ++k) g.data(k, i) = static_cast<Scalar>(gp * q[k] * ((k < c - 1 ? 1.0 : 0.0) - p));
  }
  return g;
}

// ---------------------------------------------------------------------------
// TaskHead

template <typename Scalar>
TaskHead<Scalar>::TaskHead(const ModelConfig& cfg, const FieldType& in, int classes, std::mt19937_64& rng) {
  const auto& group = in.group();
  const FieldType mid = feature_type(cfg, group, cfg.decoder_multiplicity);
  const FieldType logits = cfg.plain ? FieldType::trivial(group, classes + 1) : FieldType::regular(group, classes + 1);
  decoder_.add("conv1", make_conv<Scalar>(in, mid, 3, 1, cfg.plain, false, rng));
  decoder_.emplace("norm1", EquiNorm<Scalar>(mid));
  decoder_.emplace("relu1", ReLU<Scalar>());
  decoder_.add("conv2", make_conv<Scalar>(mid, mid, 3, 1, cfg.plain, false, rng));
  decoder_.emplace("norm2", EquiNorm<Scalar>(mid));
  decoder_.emplace("relu2", ReLU<Scalar>());
  decoder_.add("conv3", make_conv<Scalar>(mid, logits, 1, 1, cfg.plain, true, rng));
  decoder_.emplace("group_pool", GroupPool<Scalar>());
  upsample_ = &decoder_.emplace("upsample", BilinearUpsample<Scalar>(cfg.output_stride()));
  const FieldType cat = FieldType::trivial(group, classes + 2);
  fusion_ = make_conv<Scalar>(cat, FieldType::trivial(group, 1), 1, 1, cfg.plain, true, rng);
}

template <typename Scalar>
TaskOutput<Scalar> TaskHead<Scalar>::forward(const Field& features, int height, int width) {
  upsample_->set_target(height, width);
  Field s = decoder_.forward(features);
  Field p = foreground_pool(s);
  const Field cat = concat_channels<Scalar>({&p, &s});
  if (trace_) trace_->push_back({trace_prefix_ + "fusion", fusion_.get(), cat});
  Field z = fusion_->forward(cat);
  Field y = z;
  y.data = (Scalar(1) / (Scalar(1) + (-z.data.array()).exp())).matrix();
  s_ = std::make_unique<Field>(s);
  has_forward_ = true;
  return {std::move(s), std::move(p), std::move(z), std::move(y)};
}

template <typename Scalar>
FeatureField<Scalar> TaskHead<Scalar>::backward(const TaskGradients<Scalar>& grads) {
  if (!has_forward_) throw UsageError("task head: backward called before forward");
  const auto parts = split_channels(fusion_->backward(grads.z), {FieldType::trivial(s_->type.group(), 1), s_->type});
  Field gs = parts[1];
  gs.data += grads.s.data;
  gs.data += foreground_pool_backward(*s_, parts[0]).data;
  return decoder_.backward(gs);
}

template <typename Scalar>
void TaskHead<Scalar>::collect_parameters(const std::string& prefix, std::vector<NamedParameter<Scalar>>& out) {
  decoder_.collect_parameters(prefix + "decoder.", out);
  fusion_->collect_parameters(prefix + "fusion.", out);
}

template <typename Scalar>
void TaskHead<Scalar>::collect_buffers(const std::string& prefix, std::vector<NamedBuffer<Scalar>>& out) {
  decoder_.collect_buffers(prefix + "decoder.", out);
}

template <typename Scalar>
void TaskHead<Scalar>::set_trace(std::vector<LayerTrace<Scalar>>* trace, const std::string& prefix) {
  trace_ = trace;
  trace_prefix_ = prefix;
  decoder_.set_trace(trace, prefix + "decoder.");
}

// ---------------------------------------------------------------------------
// EquiSymModel

template <typename Scalar>
EquiSymModel<Scalar>::EquiSymModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), group_(cfg_.group_order) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  const auto& mults = cfg_.stage_multiplicities;
  FieldType current = feature_type(cfg_, group_, mults[0]);
  encoder_.add("stem.conv", make_conv<Scalar>(input_type(), current, 3, 1, cfg_.plain, false, rng));
  encoder_.emplace("stem.norm", EquiNorm<Scalar>(current));
  encoder_.emplace("stem.relu", ReLU<Scalar>());
  int pools = 0;
  int dilation = 1;
  for (std::size_t s = 0; s < mults.size(); ++s) {
    const std::string stage = "stage" + std::to_string(s + 1);
    if (s > 0) {
      if (pools < 3) {
        encoder_.emplace(stage + ".pool", MaxPool2<Scalar>());
        ++pools;
      } else {
        dilation *= 2;
      }
    }
    const FieldType next = feature_type(cfg_, group_, mults[s]);
    for (int b = 0; b < cfg_.blocks_per_stage; ++b) {
      encoder_.emplace(stage + ".block" + std::to_string(b + 1),
                       ResidualBlock<Scalar>(b == 0 ? current : next, next, dilation, cfg_.plain, rng));
    }
    current = next;
  }
  const FieldType aspp_out = feature_type(cfg_, group_, cfg_.aspp_multiplicity);
  encoder_.emplace("aspp", Aspp<Scalar>(current, aspp_out, cfg_.aspp_dilation_rates, cfg_.plain, rng));
  if (cfg_.has_ref()) ref_ = std::make_unique<TaskHead<Scalar>>(cfg_, aspp_out, cfg_.n_ref, rng);
  if (cfg_.has_rot()) rot_ = std::make_unique<TaskHead<Scalar>>(cfg_, aspp_out, cfg_.n_rot, rng);
}

template <typename Scalar>
FeatureField<Scalar> EquiSymModel<Scalar>::encode(const Field& image) {
  if (!(image.type == input_type()))
    throw UsageError("model input must be a 3-channel trivial field, got " + image.type.describe());
  if (image.height < cfg_.min_input || image.width < cfg_.min_input)
    throw UsageError("input " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                     " is smaller than the minimum " + std::to_string(cfg_.min_input));
  in_h_ = image.height;
  in_w_ = image.width;
  return encoder_.forward(image);
}

template <typename Scalar>
Predictions<Scalar> EquiSymModel<Scalar>::forward(const Field& image) {
  const Field features = encode(image);
  Predictions<Scalar> out;
  if (ref_) out.ref = ref_->forward(features, image.height, image.width);
  if (rot_) out.rot = rot_->forward(features, image.height, image.width);
  return out;
}

template <typename Scalar>
FeatureField<Scalar> EquiSymModel<Scalar>::backward(const PredictionGradients<Scalar>& grads) {
  std::optional<Field> g;
  auto accumulate = [&](std::unique_ptr<TaskHead<Scalar>>& head, const std::optional<TaskGradients<Scalar>>& tg,
                        const char* name) {
    if (!tg) return;
    if (!head) throw UsageError(std::string("model has no ") + name + " head");
    Field gh = head->backward(*tg);
    if (g) g->data += gh.data;
    else g = std::move(gh);
  };
  accumulate(ref_, grads.ref, "ref");
  accumulate(rot_, grads.rot, "rot");
  if (!g) throw UsageError("backward needs gradients for at least one head");
  return encoder_.backward(*g);
}

template <typename Scalar>
std::vector<NamedParameter<Scalar>> EquiSymModel<Scalar>::parameters() {
  std::vector<NamedParameter<Scalar>> out;
  encoder_.collect_parameters("encoder.", out);
  if (ref_) ref_->collect_parameters("ref.", out);
  if (rot_) rot_->collect_parameters("rot.", out);
  return out;
}

template <typename Scalar>
std::vector<NamedBuffer<Scalar>> EquiSymModel<Scalar>::buffers() {
  std::vector<NamedBuffer<Scalar>> out;
  encoder_.collect_buffers("encoder.", out);
  if (ref_) ref_->collect_buffers("ref.", out);
  if (rot_) rot_->collect_buffers("rot.", out);
  return out;
}

template <typename Scalar>
std::size_t EquiSymModel<Scalar>::parameter_count() {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += static_cast<std::size_t>(p.param->value.size());
  return n;
}

template <typename Scalar>
void EquiSymModel<Scalar>::zero_grad() {
  for (auto& p : parameters()) p.param->zero_grad();
}

template <typename Scalar>
void EquiSymModel<Scalar>::set_training(bool training) {
  encoder_.set_training(training);
  if (ref_) ref_->set_training(training);
  if (rot_) rot_->set_training(training);
}

template <typename Scalar>
void EquiSymModel<Scalar>::set_trace(std::vector<LayerTrace<Scalar>>* trace) {
  trace_ = trace;
  encoder_.set_trace(trace, "encoder.");
  if (ref_) ref_->set_trace(trace, "ref.");
  if (rot_) rot_->set_trace(trace, "rot.");
}

#define EQUISYM_INSTANTIATE_MODEL(T)                                                                   \
  template class Module<T>;                                                                           \
  template class Sequential<T>;                                                                       \
  template class ResidualBlock<T>;                                                                    \
  template class Aspp<T>;                                                                             \
  template class TaskHead<T>;                                                                         \
  template class EquiSymModel<T>;                                                                     \
  template FeatureField<T> foreground_pool(const FeatureField<T>&);                                   \
  template FeatureField<T> foreground_pool_backward(const FeatureField<T>&, const FeatureField<T>&);

EQUISYM_INSTANTIATE_MODEL(float)
EQUISYM_INSTANTIATE_MODEL(double)

}  // namespace equisym
