#include "mvgcca/objectives.hpp"
#include "objective_fixture.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace mvgcca;
using namespace testing_support;

namespace {

// Double loop over (k, j != k) with no shared code path.
double naive_q(const Instance& in) {
  const size_t k_views = in.views.size();
  const double batch = static_cast<double>(in.g.rows());
  double total = 0.0;
  for (size_t k = 0; k < k_views; ++k) {
    for (size_t j = 0; j < k_views; ++j) {
      if (j == k) continue;
      const Matrix fj = predict(in.encoders[j], in.views[j]);
      const Matrix rec = predict(in.decoders[k], fj);
      total += (rec - in.views[k]).squaredNorm() / in.normalizers[k];
    }
  }
  return total / (batch * static_cast<double>(k_views - 1));
}

std::vector<Matrix> encode(const Instance& in) {
  std::vector<Matrix> out;
  for (size_t k = 0; k < in.views.size(); ++k) out.push_back(predict(in.encoders[k], in.views[k]));
  return out;
}

}  // namespace

TEST_CASE("r_term examples") {
  std::mt19937_64 rng(41);
  const Matrix g = random_matrix(rng, 5, 2);
  const std::vector<Matrix> same{g, g};
  CHECK(r_term(same, g).value == 0.0);

  Matrix f(1, 2), target = Matrix::Zero(1, 2);
  f << 1, 0;
  const std::vector<Matrix> one{f};
  const TermResult r = r_term(one, target);
  CHECK(r.value == 1.0);
  CHECK(r.grads[0](0, 0) == 2.0);
  CHECK(r.grads[0](0, 1) == 0.0);
}

TEST_CASE("r_term gradient matches finite differences") {
  std::mt19937_64 rng(42);
  const Matrix g = random_matrix(rng, 6, 3);
  std::vector<Matrix> enc{random_matrix(rng, 6, 3), random_matrix(rng, 6, 3)};
  const TermResult r = r_term(enc, g);
  for (size_t k = 0; k < enc.size(); ++k) {
    const auto numeric = numeric_gradient(
        [&](const std::vector<double>& p) {
          std::vector<Matrix> probe = enc;
          probe[k] = Eigen::Map<const Matrix>(p.data(), 6, 3);
          return r_term(probe, g).value;
        },
        flatten_matrix(enc[k]));
    CHECK(relative_error(flatten_matrix(r.grads[k]), numeric) <= 1e-6);
  }
}

TEST_CASE("l_term examples") {
  std::mt19937_64 rng(43);
  Instance in = random_instance(rng, 2, 8, 2);
  const auto enc = encode(in);
  SUBCASE("zero decoders give batch power over normalizer") {
    std::vector<Mlp> zero;
    for (const Mlp& d : in.decoders) zero.emplace_back(d.spec());
    const double value = l_term(in.views, enc, zero, in.normalizers).value;
    CHECK(value == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("perfect reconstruction") {
    const Matrix f = random_matrix(rng, 8, 2);
    Mlp dec(MlpSpec{{2, 3}});
    dec.weights()[0] = random_matrix(rng, 3, 2);
    const Matrix x = predict(dec, f);
    const std::vector<Matrix> views{x, x}, encs{f, f};
    const std::vector<Mlp> decs{dec, dec};
    const std::vector<double> n{1.0, 1.0};
    CHECK(l_term(views, encs, decs, n).value <= 1e-24);
    CHECK(q_term(views, encs, decs, n).value <= 1e-24);
  }
}

TEST_CASE("l_term gradients match finite differences") {
  std::mt19937_64 rng(44);
  Instance in = random_instance(rng, 2, 7, 3);
  const auto enc = encode(in);
  const ReconstructionTerm l = l_term(in.views, enc, in.decoders, in.normalizers);
  for (size_t k = 0; k < 2; ++k) {
    const auto numeric = numeric_gradient(
        [&](const std::vector<double>& p) {
          std::vector<Matrix> probe = enc;
          probe[k] = Eigen::Map<const Matrix>(p.data(), enc[k].rows(), enc[k].cols());
          return l_term(in.views, probe, in.decoders, in.normalizers, false).value;
        },
        flatten_matrix(enc[k]));
    CHECK(relative_error(flatten_matrix(l.encoding_grads[k]), numeric) <= 1e-6);
  }
}

TEST_CASE("q_term with zero decoders equals zero-decoder l_term for two views") {
  std::mt19937_64 rng(45);
  Instance in = random_instance(rng, 2, 9, 2);
  std::vector<Mlp> zero;
  for (const Mlp& d : in.decoders) zero.emplace_back(d.spec());
  const auto enc = encode(in);
  CHECK(q_term(in.views, enc, zero, in.normalizers).value ==
        doctest::Approx(l_term(in.views, enc, zero, in.normalizers).value).epsilon(1e-14));
}

TEST_CASE("q_term matches the naive double loop and finite differences with three views") {
  std::mt19937_64 rng(46);
  Instance in = random_instance(rng, 3, 6, 2);
  const auto enc = encode(in);
  const ReconstructionTerm q = q_term(in.views, enc, in.decoders, in.normalizers);
  CHECK(q.value == doctest::Approx(naive_q(in)).epsilon(1e-12));
  for (size_t k = 0; k < 3; ++k) {
    const auto numeric = numeric_gradient(
        [&](const std::vector<double>& p) {
          std::vector<Matrix> probe = enc;
          probe[k] = Eigen::Map<const Matrix>(p.data(), enc[k].rows(), enc[k].cols());
          return q_term(in.views, probe, in.decoders, in.normalizers, false).value;
        },
        flatten_matrix(enc[k]));
    CHECK(relative_error(flatten_matrix(q.encoding_grads[k]), numeric) <= 1e-6);

    Mlp probe_dec = in.decoders[k];
    const auto numeric_dec = numeric_gradient(
        [&](const std::vector<double>& p) {
          std::vector<Mlp> decs = in.decoders;
          probe_dec.assign(p);
          decs[k] = probe_dec;
          return q_term(in.views, enc, decs, in.normalizers, false).value;
        },
        in.decoders[k].flatten());
    CHECK(relative_error(flatten_grads(q.decoder_grads[k]), numeric_dec) <= 1e-6);
  }
}

TEST_CASE("q_term never reconstructs a view from its own encoding") {
  std::mt19937_64 rng(47);
  Instance in = random_instance(rng, 2, 5, 2);
  auto enc = encode(in);
  const double before = q_term(in.views, enc, in.decoders, in.normalizers).value;
  const ReconstructionTerm q = q_term(in.views, enc, in.decoders, in.normalizers);
  Matrix shifted = enc[0];
  shifted.array() += 10.0;
  std::vector<Matrix> moved = enc;
  moved[0] = shifted;
  const double after = q_term(in.views, moved, in.decoders, in.normalizers).value;
  // f_0 only reaches the view-1 reconstruction.
  const double view1_before = (predict(in.decoders[1], enc[0]) - in.views[1]).squaredNorm() /
                              in.normalizers[1] / 5.0;
  const double view1_after = (predict(in.decoders[1], shifted) - in.views[1]).squaredNorm() /
                             in.normalizers[1] / 5.0;
  CHECK(after - before == doctest::Approx(view1_after - view1_before).epsilon(1e-10));
  CHECK(q.value >= 0.0);
  CHECK_THROWS_AS(q_term(std::span(in.views).first(1), std::span(enc).first(1),
                         std::span(in.decoders).first(1), std::span(in.normalizers).first(1)),
                  InvalidInput);
}

TEST_CASE("compose examples") {
  ObjectiveSpec spec;
  spec.method = Method::proposed;
  spec.lambda = 0.0;
  CHECK(compose(spec, 0.7, 0.2, 0.4).total == 0.7);
  spec.lambda = 1.0;
  CHECK(compose(spec, 0.7, 0.2, 0.4).total == 0.4);
  spec.method = Method::dccae;
  spec.lambda = 0.5;
  CHECK(compose(spec, 0.4, 0.2, 9.0).total == doctest::Approx(0.3));
  spec.method = Method::dgcca;
  CHECK(compose(spec, 0.4, 0.2, 9.0).total == 0.4);
}

TEST_CASE("method names round trip") {
  for (Method m : {Method::linear_cca, Method::maxvar, Method::dgcca, Method::dccae, Method::proposed})
    CHECK(parse_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_method("pca"), InvalidInput);
}

TEST_CASE("end-to-end objective gradients on 20 random instances") {
  std::mt19937_64 rng(48);
  const Method methods[] = {Method::dgcca, Method::dccae, Method::proposed};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Instance in = random_instance(rng, 2 + trial % 2, 6, 1 + trial % 3);
    ObjectiveSpec spec;
    spec.method = methods[trial % 3];
    spec.lambda = unit(rng);
    spec.normalizers = in.normalizers;
    spec.normalize_r = trial % 4 == 0;
    const ObjectiveResult res =
        evaluate_objective(spec, in.views, in.encoders, in.decoders, in.g, true);
    CHECK(res.loss.r >= 0.0);
    CHECK(res.loss.l >= 0.0);
    CHECK(res.loss.q >= 0.0);

    auto total_with = [&](size_t which, bool decoder, const std::vector<double>& p) {
      std::vector<Mlp> enc = in.encoders, dec = in.decoders;
      (decoder ? dec : enc)[which].assign(p);
      return evaluate_objective(spec, in.views, enc, dec, in.g, false).loss.total;
    };
    for (size_t k = 0; k < in.views.size(); ++k) {
      const auto numeric = numeric_gradient(
          [&](const std::vector<double>& p) { return total_with(k, false, p); },
          in.encoders[k].flatten());
      CHECK(relative_error(flatten_grads(res.encoder_grads[k]), numeric) <= 1e-4);
      if (has_decoders(spec.method)) {
        const auto numeric_dec = numeric_gradient(
            [&](const std::vector<double>& p) { return total_with(k, true, p); },
            in.decoders[k].flatten());
        CHECK(relative_error(flatten_grads(res.decoder_grads[k]), numeric_dec) <= 1e-4);
      }
    }
  }
}
