#include "equisym/model_checks.hpp"

#include <algorithm>
#include <memory>

namespace equisym {

template <typename Scalar>
std::vector<LayerResidual> layer_residuals(EquiSymModel<Scalar>& model, const FeatureField<Scalar>& image,
                                           double margin) {
  std::vector<LayerTrace<Scalar>> trace;
  model.set_trace(&trace);
  model.forward(image);
  model.set_trace(nullptr);
  std::vector<LayerResidual> out;
  for (auto& t : trace) {
    LayerResidual r{t.name, t.layer->kind(), 0.0, GroupElement{0, 0}};
    for (const auto& g : model.group().elements()) {
      const double res = two_path_residual(*t.layer, t.input, g, margin);
      if (res > r.residual) r.residual = res, r.worst = g;
    }
    out.push_back(std::move(r));
  }
  return out;
}

template <typename Scalar>
std::vector<HeadResidual> model_residuals(EquiSymModel<Scalar>& model, const FeatureField<Scalar>& image,
                                          double margin) {
  std::vector<HeadResidual> out;
  const auto& cfg = model.config();
  for (const auto& g : model.group().elements()) {
    HeadResidual r{g, 0.0, 0.0};
    if (cfg.has_ref())
      r.ref = two_path_residual<Scalar>([&](const FeatureField<Scalar>& x) { return model.forward(x).ref->y; }, image,
                                        g, margin);
    if (cfg.has_rot())
      r.rot = two_path_residual<Scalar>([&](const FeatureField<Scalar>& x) { return model.forward(x).rot->y; }, image,
                                        g, margin);
    out.push_back(r);
  }
  return out;
}

std::vector<GradcheckEntry> gradcheck_model(EquiSymModel<double>& model, const FeatureField<double>& image,
                                            const SampleLabels& labels, const LossConfig& cfg, std::mt19937_64& rng,
                                            double eps, int max_coords) {
  auto loss = [&](const FeatureField<double>& x) { return total_loss(model.forward(x), labels, cfg, static_cast<PredictionGradients<double>*>(nullptr)).total; };

  model.zero_grad();
  PredictionGradients<double> grads;
  total_loss(model.forward(image), labels, cfg, &grads);
  const auto grad_image = model.backward(grads);
  auto params = model.parameters();
  std::vector<RowMatrix<double>> param_grads;
  for (auto& p : params) param_grads.push_back(p.param->grad);

  std::vector<GradcheckEntry> out;
  {
    FeatureField<double> x = image;
    std::vector<double> analytic, numeric;
    for (auto i : pick_coordinates(x.data.size(), max_coords, rng)) {
      const double orig = x.data.data()[i];
      x.data.data()[i] = orig + eps;
      const double plus = loss(x);
      x.data.data()[i] = orig - eps;
      const double minus = loss(x);
      x.data.data()[i] = orig;
      analytic.push_back(grad_image.data.data()[i]);
      numeric.push_back((plus - minus) / (2 * eps));
    }
    out.push_back({"input", relative_error(analytic, numeric, kModelGradientFloor), static_cast<int>(analytic.size())});
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& value = params[k].param->value;
    std::vector<double> analytic, numeric;
    for (auto i : pick_coordinates(value.size(), max_coords, rng)) {
      const double orig = value.data()[i];
      value.data()[i] = orig + eps;
      const double plus = loss(image);
      value.data()[i] = orig - eps;
      const double minus = loss(image);
      value.data()[i] = orig;
      analytic.push_back(param_grads[k].data()[i]);
      numeric.push_back((plus - minus) / (2 * eps));
    }
    out.push_back({params[k].name, relative_error(analytic, numeric, kModelGradientFloor), static_cast<int>(analytic.size())});
  }
  return out;
}

SampleLabels random_labels(const ModelConfig& cfg, int height, int width, std::mt19937_64& rng) {
  SampleLabels l{height, width, {}, {}, {}, {}};
  std::bernoulli_distribution fg(0.3);
  for (int i = 0; i < height * width; ++i) {
    const bool r = fg(rng), q = fg(rng);
    l.y_ref.push_back(r);
    l.s_ref.push_back(r ? static_cast<int>(rng() % cfg.n_ref) : cfg.n_ref);
    l.y_rot.push_back(q);
    l.s_rot.push_back(q ? static_cast<int>(rng() % cfg.n_rot) : cfg.n_rot);
  }
  return l;
}

template <typename Scalar>
void randomize_affine(EquiSymModel<Scalar>& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 1.5), b(-0.3, 0.3);
  for (auto& p : model.parameters()) {
    const bool scale = p.name.ends_with(".scale");
    if (!scale && !p.name.ends_with(".shift") && !p.name.ends_with(".bias")) continue;
    for (Eigen::Index i = 0; i < p.param->value.size(); ++i)
      p.param->value.data()[i] = static_cast<Scalar>(scale ? u(rng) : b(rng));
  }
}

namespace {

// Values spread on a coarse shuffled grid keep inputs away from ReLU and max kinks.
FeatureField<double> spread_field(const FieldType& type, int h, int w, std::mt19937_64& rng) {
  FeatureField<double> f(type, h, w);
  std::vector<double> values(static_cast<std::size_t>(f.data.size()));
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / values.size();
  std::shuffle(values.begin(), values.end(), rng);
  for (std::size_t i = 0; i < values.size(); ++i) f.data.data()[i] = values[i];
  return f;
}

std::unique_ptr<SteerableConv<double>> suite_conv(FieldType in, FieldType out, int k, ExpansionRule rule,
                                                  std::mt19937_64& rng, int stride = 1, int dilation = 1) {
  auto conv = std::make_unique<SteerableConv<double>>(SteerableKernelSpec{in, out, k, rule}, stride, dilation);
  conv->init_he(rng);
  std::normal_distribution<double> normal(0.0, 0.1);
  for (Eigen::Index i = 0; i < conv->bias().value.size(); ++i) conv->bias().value.data()[i] = normal(rng);
  return conv;
}

}  // namespace

std::vector<SuiteEntry> gradcheck_suite(int group_order, std::uint64_t seed) {
  const DihedralGroup group(group_order);
  std::mt19937_64 rng(seed);
  const auto triv = FieldType::trivial(group, 2);
  const auto reg = FieldType::regular(group, 1);
  const auto img = spread_field(triv, 8, 8, rng);
  const auto feat = spread_field(reg, 8, 8, rng);
  const auto pooled = spread_field(reg, 1, 1, rng);

  std::vector<std::pair<std::string, std::unique_ptr<Layer<double>>>> layers;
  layers.emplace_back("lift_conv 3x3", suite_conv(triv, reg, 3, ExpansionRule::lifting, rng));
  layers.emplace_back("group_conv 3x3", suite_conv(reg, FieldType::regular(group, 2), 3, ExpansionRule::group_to_group, rng));
  layers.emplace_back("group_conv 3x3 stride 2", suite_conv(reg, reg, 3, ExpansionRule::group_to_group, rng, 2, 1));
  layers.emplace_back("group_conv 3x3 dilation 2", suite_conv(reg, reg, 3, ExpansionRule::group_to_group, rng, 1, 2));
  layers.emplace_back("group_conv 1x1", suite_conv(reg, reg, 1, ExpansionRule::group_to_group, rng));
  layers.emplace_back("trivial_conv 1x1", suite_conv(triv, FieldType::trivial(group, 3), 1, ExpansionRule::trivial_pointwise, rng));
  layers.emplace_back("plain_conv 3x3", suite_conv(triv, FieldType::trivial(group, 3), 3, ExpansionRule::unconstrained, rng));
  layers.emplace_back("relu", std::make_unique<ReLU<double>>());
  layers.emplace_back("equi_norm", std::make_unique<EquiNorm<double>>(reg));
  layers.emplace_back("max_pool2", std::make_unique<MaxPool2<double>>());
  layers.emplace_back("bilinear_upsample x2", std::make_unique<BilinearUpsample<double>>(2));
  layers.emplace_back("global_avg_pool", std::make_unique<GlobalAvgPool<double>>());
  layers.emplace_back("group_pool", std::make_unique<GroupPool<double>>());
  auto broadcast = std::make_unique<Broadcast<double>>();
  broadcast->set_target(4, 4);
  layers.emplace_back("broadcast", std::move(broadcast));

  std::vector<SuiteEntry> out;
  for (auto& [name, layer] : layers) {
    const FeatureField<double>& input = name.starts_with("lift") || name.starts_with("trivial") || name.starts_with("plain")
                                            ? img
                                            : name == "broadcast" ? pooled : feat;
    // The step stays below half the grid spacing of the spread input.
    const double eps = std::min(1e-3, 0.5 / static_cast<double>(input.data.size()));
    for (const auto& e : gradcheck_layer(*layer, input, rng, eps)) out.push_back({name, e.tensor, e.max_relative_error});
  }

  auto cfg = ModelConfig::tiny();
  cfg.group_order = group_order;
  if (group_order == 8) cfg.n_ref = 8;
  EquiSymModel<double> model(cfg, seed);
  randomize_affine(model, rng);
  const auto image = random_field<double>(model.input_type(), 8, 8, rng);
  const auto labels = random_labels(cfg, 8, 8, rng);
  for (const auto& e : gradcheck_model(model, image, labels, LossConfig{}, rng))
    out.push_back({"model loss", e.tensor, e.max_relative_error});
  return out;
}

template std::vector<LayerResidual> layer_residuals(EquiSymModel<float>&, const FeatureField<float>&, double);
template std::vector<LayerResidual> layer_residuals(EquiSymModel<double>&, const FeatureField<double>&, double);
template std::vector<HeadResidual> model_residuals(EquiSymModel<float>&, const FeatureField<float>&, double);
template std::vector<HeadResidual> model_residuals(EquiSymModel<double>&, const FeatureField<double>&, double);
template void randomize_affine(EquiSymModel<float>&, std::mt19937_64&);
template void randomize_affine(EquiSymModel<double>&, std::mt19937_64&);

}  // namespace equisym
