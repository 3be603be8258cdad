#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "srbrcnn/gradcheck.hpp"
#include "srbrcnn/model.hpp"

namespace srbrcnn {

struct GradSuiteResult {
  std::vector<std::pair<std::string, GradCheckReport>> checks;
  bool pass = true;
};

namespace detail {

struct NamedParam {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Binds every NamedParam onto a fresh tape, builds the scalar objective,
// computes analytic gradients once, then finite-differences the same
// objective with unbound parameters.
inline GradCheckReport check_objective(
    std::vector<NamedParam>& ps,
    const std::function<Var(Tape&, const std::vector<Var>&)>& build, double step,
    double tolerance) {
  auto run = [&](bool with_grads) {
    Tape t;
    std::vector<Var> vars;
    vars.reserve(ps.size());
    for (NamedParam& p : ps) {
      if (with_grads) p.grad.fill(0.0);
      vars.push_back(t.param(p.value, with_grads ? &p.grad : nullptr));
    }
    Var loss = build(t, vars);
    if (with_grads) t.backward(loss);
    return t.value(loss).at(0);
  };
  run(true);
  std::vector<CheckedParam> cps;
  cps.reserve(ps.size());
  for (NamedParam& p : ps) cps.push_back({p.name, &p.value, &p.grad});
  return grad_check([&] { return run(false); }, cps, step, tolerance);
}

inline NamedParam named_uniform(std::string name, std::vector<size_t> shape,
                                std::mt19937_64& rng) {
  Tensor v = Tensor::uniform(shape, rng, -1.0, 1.0);
  return {std::move(name), v, Tensor::zeros(std::move(shape))};
}

inline RelationInstance gradsuite_instance() {
  DependencyTree tree;
  const char* forms[] = {"alpha", "bravo", "tango", "delta", "echo"};
  const char* rels[] = {"root", "attr", "mod", "link", "part"};
  size_t heads[] = {0, 1, 2, 1, 4};
  for (size_t i = 0; i < 5; ++i)
    tree.tokens.push_back({i + 1, forms[i], "NOUN", heads[i], rels[i]});
  RelationInstance inst;
  inst.sent_id = "g#1";
  inst.sentence = tree;
  // path 3 -> 2 -> 1 -> 4: three edges, so every conv position is exercised
  inst.e1 = {{3, 3}, "X"};
  inst.e2 = {{4, 4}, "Y"};
  inst.label = "A";
  inst.direction = Direction::e1_to_e2;
  return inst;
}

}  // namespace detail

// Finite-difference validation of every backward rule: one check per core
// primitive plus the complete training objective on a small model, with
// dropout active so its mask scaling is covered too.
inline GradSuiteResult run_gradcheck_suite(uint64_t seed, double step, double tolerance) {
  using detail::NamedParam;
  GradSuiteResult out;
  auto rng = make_rng(seed);
  auto add = [&](const std::string& name, GradCheckReport rep) {
    out.checks.emplace_back(name, rep);
    out.pass = out.pass && rep.pass;
  };

  {
    std::vector<NamedParam> ps;
    ps.push_back(detail::named_uniform("W", {3, 4}, rng));
    ps.push_back(detail::named_uniform("b", {3}, rng));
    ps.push_back(detail::named_uniform("x", {4}, rng));
    Tensor c = Tensor::uniform({3}, rng, -1.0, 1.0);
    add("affine", detail::check_objective(
                      ps,
                      [&](Tape& t, const std::vector<Var>& v) {
                        return t.reduce_sum(t.mul(t.affine(v[2], v[0], v[1]), t.constant(c)));
                      },
                      step, tolerance));
  }
  {
    size_t d = 2, h = 3;
    std::vector<NamedParam> ps;
    ps.push_back(detail::named_uniform("wx", {4 * h, d}, rng));
    ps.push_back(detail::named_uniform("wh", {4 * h, h}, rng));
    ps.push_back(detail::named_uniform("b", {4 * h}, rng));
    ps.push_back(detail::named_uniform("x", {d}, rng));
    ps.push_back(detail::named_uniform("h_prev", {h}, rng));
    ps.push_back(detail::named_uniform("c_prev", {h}, rng));
    Tensor c = Tensor::uniform({2 * h}, rng, -1.0, 1.0);
    add("lstm_cell", detail::check_objective(
                         ps,
                         [&](Tape& t, const std::vector<Var>& v) {
                           LstmDirRefs refs{v[0], v[1], v[2]};
                           auto [ht, ct] = lstm_cell(t, v[3], v[4], v[5], refs);
                           return t.reduce_sum(t.mul(t.concat(ht, ct), t.constant(c)));
                         },
                         step, tolerance));
  }
  {
    std::vector<NamedParam> ps;
    ps.push_back(detail::named_uniform("w_con", {3, 6}, rng));
    ps.push_back(detail::named_uniform("b_con", {3}, rng));
    ps.push_back(detail::named_uniform("h_a", {2}, rng));
    ps.push_back(detail::named_uniform("h_ab", {2}, rng));
    ps.push_back(detail::named_uniform("h_b", {2}, rng));
    Tensor c = Tensor::uniform({3}, rng, -1.0, 1.0);
    add("conv_unit", detail::check_objective(
                         ps,
                         [&](Tape& t, const std::vector<Var>& v) {
                           return t.reduce_sum(
                               t.mul(conv_unit(t, v[2], v[3], v[4], v[0], v[1]), t.constant(c)));
                         },
                         step, tolerance));
  }
  {
    std::vector<NamedParam> ps;
    ps.push_back(detail::named_uniform("x1", {4}, rng));
    ps.push_back(detail::named_uniform("x2", {4}, rng));
    ps.push_back(detail::named_uniform("x3", {4}, rng));
    Tensor c = Tensor::uniform({4}, rng, -1.0, 1.0);
    add("max_pool", detail::check_objective(
                        ps,
                        [&](Tape& t, const std::vector<Var>& v) {
                          return t.reduce_sum(t.mul(t.max_pool(v), t.constant(c)));
                        },
                        step, tolerance));
  }
  {
    std::vector<NamedParam> ps;
    ps.push_back(detail::named_uniform("logits", {5}, rng));
    add("softmax_xent", detail::check_objective(
                            ps,
                            [&](Tape& t, const std::vector<Var>& v) {
                              return t.softmax_xent(v[0], 2).second;
                            },
                            step, tolerance));
  }
  {
    RelationInstance inst = detail::gradsuite_instance();
    LabelSchema schema{{"A", "B"}};
    auto [words, rels] = build_vocabs({inst}, std::nullopt);
    ModelParams m = ModelParams::shaped(schema, std::move(words), std::move(rels), 4, 3, 4);
    m.init(derive_seed(seed, {seed_scope::kParamInit}));
    Gradients grads = m.p.zeros_like();
    uint64_t dseed = derive_seed(seed, {seed_scope::kDropout});
    auto run = [&](Gradients* g) {
      Tape t;
      BoundModel bm = BoundModel::bind(t, m, g);
      ForwardOut f = brcnn_forward(t, bm, inst, RunMode::train, 0.8, dseed);
      LossOut l = brcnn_loss(t, bm, f, inst.label, inst.direction, 1e-3);
      if (g) t.backward(l.loss);
      return t.value(l.loss).at(0);
    };
    run(&grads);
    std::vector<CheckedParam> cps;
    std::vector<const Tensor*> gs;
    grads.for_each([&](const char*, const Tensor& t) { gs.push_back(&t); });
    size_t i = 0;
    m.p.for_each([&](const char* name, Tensor& t) { cps.push_back({name, &t, gs[i++]}); });
    add("full_objective", grad_check([&] { return run(nullptr); }, cps, step, tolerance));
  }
  return out;
}

inline std::string render_gradsuite(const GradSuiteResult& r) {
  std::string out;
  for (const auto& [name, rep] : r.checks)
    out += strf("%-16s coords %6zu  max rel err %.3e  worst %-24s %s\n", name.c_str(),
                rep.coords, rep.max_rel_err, rep.worst.empty() ? "-" : rep.worst.c_str(),
                rep.pass ? "PASS" : "FAIL");
  out += r.pass ? "gradient check: PASS\n" : "gradient check: FAIL\n";
  return out;
}

}  // namespace srbrcnn
