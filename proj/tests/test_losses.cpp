#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "peaky/counting.hpp"
#include "peaky/losses.hpp"
#include "peaky/oracle.hpp"
#include "peaky/signals.hpp"
#include "peaky/verify.hpp"
#include "test_helpers.hpp"

using namespace peaky;

namespace {

const LabelTopology kSingle = parse_topology("B* a+ B*");

PosteriorTable uniform_posteriors(const LabelTopology& topo, int T) {
  PosteriorTable post;
  post.labels = topo.alphabet();
  post.probs.assign(T, std::vector<double>(post.labels.size(), 1.0 / post.labels.size()));
  return post;
}

}  // namespace

TEST_CASE("full sum under uniform posteriors is count / |S|^T") {
  const PosteriorTable post = uniform_posteriors(kSingle, 5);
  CHECK(full_sum_log_prob(kSingle, post) == Catch::Approx(std::log(15.0 / 32.0)).margin(1e-12));
  CHECK(ctc_loss(kSingle, post) == Catch::Approx(0.7576857016975165).margin(1e-10));
}

TEST_CASE("single forced alignment with certain posteriors scores zero") {
  const PosteriorTable post = testing::sharp_posteriors({"B", "a"}, {"a"});
  CHECK(full_sum_log_prob(kSingle, post) == 0.0);
  CHECK(ctc_loss(kSingle, post) == 0.0);
}

TEST_CASE("sharp posteriors on any valid alignment reach loss zero") {
  for (const auto& alignment :
       {testing::runs({{"B", 2}, {"a", 3}, {"B", 1}}), testing::runs({{"a", 6}})}) {
    const PosteriorTable post = testing::sharp_posteriors({"B", "a"}, alignment);
    CHECK(ctc_loss(kSingle, post) == 0.0);
  }
  // Any non-sharp frame leaves the loss strictly positive.
  PosteriorTable post = testing::sharp_posteriors({"B", "a"}, testing::runs({{"B", 2}, {"a", 4}}));
  post.probs[3] = {0.2, 0.8};
  CHECK(ctc_loss(kSingle, post) > 0.0);
}

TEST_CASE("loss and occupancy match the enumeration oracle on random tables") {
  std::mt19937_64 rng(314159);
  const std::vector<LabelTopology> topologies = {kSingle, ctc_topology({"a", "b", "c"}, "B"),
                                                 hmm_topology({"a", "b", "c"}, "B")};
  for (const auto& topo : topologies) {
    const int T = 10;
    for (int draw = 0; draw < 25; ++draw) {
      const PosteriorTable post = testing::random_posteriors(rng, T, topo.alphabet());
      const auto score = oracle::posterior_score(topo, post);
      CHECK(std::abs(full_sum_log_prob(topo, post) -
                     std::log(oracle::brute_force_total(topo, T, score))) <= 1e-10);
      const SoftAlignment sa = soft_alignment(topo, post);
      const auto want = oracle::brute_force_occupancy(topo, T, score);
      for (int t = 0; t < T; ++t)
        for (int s = 0; s < topo.num_labels(); ++s)
          CHECK(std::abs(sa.q[t][s] - want[t][s]) <= 1e-10);
    }
  }
}

TEST_CASE("soft alignment rows are distributions and honor structure zeros") {
  const PosteriorTable post = uniform_posteriors(kSingle, 5);
  const SoftAlignment sa = soft_alignment(kSingle, post);
  // q(a, t=3) = 9/15 under uniform posteriors.
  CHECK(sa.q[2][kSingle.label_index("a")] == Catch::Approx(0.6).margin(1e-12));
  for (const auto& row : sa.q) {
    double sum = 0.0;
    for (double v : row) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }

  // Sharp posteriors concentrate q on the one alignment.
  const auto alignment = testing::runs({{"B", 1}, {"a", 2}, {"B", 2}});
  const SoftAlignment one = soft_alignment(kSingle, testing::sharp_posteriors({"B", "a"}, alignment));
  for (int t = 0; t < 5; ++t)
    CHECK(one.q[t][kSingle.label_index(alignment[t])] == Catch::Approx(1.0).margin(1e-12));

  // Structural zeros: hmm(ab) never allows b in frame 1.
  const LabelTopology hmm = hmm_topology({"a", "b"}, "B");
  const SoftAlignment hq = soft_alignment(hmm, uniform_posteriors(hmm, 6));
  CHECK(hq.q[0][hmm.label_index("b")] == 0.0);
}

TEST_CASE("mean blank occupancy at uniform init matches the closed forms") {
  // n=4: mean over blank-input frames 303/408, over label-input frames 207/408.
  const auto results = verify::verify_generative_ratios(4);
  for (const auto& r : results) {
    INFO(r.name << " " << r.detail);
    CHECK(r.pass);
  }
}

TEST_CASE("occupancy is invariant to per-frame rescaling") {
  std::mt19937_64 rng(77);
  const PosteriorTable post = testing::random_posteriors(rng, 8, kSingle.alphabet());
  const SoftAlignment base = soft_alignment(kSingle, post);
  PosteriorTable scaled = post;
  for (double& v : scaled.probs[3]) v *= 0.125;  // rows no longer normalized; q must not care
  for (double& v : scaled.probs[6]) v *= 8.0;
  const SoftAlignment same = soft_alignment(kSingle, scaled);
  for (std::size_t t = 0; t < base.q.size(); ++t)
    for (std::size_t s = 0; s < base.q[t].size(); ++s)
      CHECK(same.q[t][s] == Catch::Approx(base.q[t][s]).margin(1e-12));
}

TEST_CASE("softmax prior averages the rows") {
  const PosteriorTable uniform = uniform_posteriors(kSingle, 7);
  CHECK(softmax_prior(uniform) == std::vector<double>{0.5, 0.5});

  PosteriorTable two;
  two.labels = {"a", "B"};
  two.probs = {{1.0, 0.0}, {0.0, 1.0}};
  CHECK(softmax_prior(two) == std::vector<double>{0.5, 0.5});

  // The optimal n=4 model emits a on half the frames.
  FfnnModel model = uniform_ffnn(2, {"a", "B"});
  model.weights = {{60.0, 0.0}, {0.0, 60.0}};
  const auto prior = softmax_prior(posteriors(model, single_label_input(4)));
  CHECK(prior[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(prior[1] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("hybrid loss with a uniform prior shifts the full-sum loss") {
  std::mt19937_64 rng(123);
  const PosteriorTable post = testing::random_posteriors(rng, 6, kSingle.alphabet());
  const double plain = ctc_loss(kSingle, post);
  const double hybrid = hybrid_loss(kSingle, post, {0.5, 0.5});
  CHECK(hybrid == Catch::Approx(plain - 6 * std::log(2.0)).margin(1e-10));
}

TEST_CASE("hybrid loss with the table's own prior counts paths") {
  const PosteriorTable uniform = uniform_posteriors(kSingle, 9);
  const double loss = hybrid_loss(kSingle, uniform, softmax_prior(uniform));
  const BigInt total = count_alignments(kSingle, 9).total;
  CHECK(loss == Catch::Approx(-std::log(to_double(total))).margin(1e-10));
  CHECK(loss < 0.0);  // ratio scores exceed 1, the sum is not a probability
}

TEST_CASE("hybrid loss rejects zero prior mass on reachable labels") {
  const PosteriorTable uniform = uniform_posteriors(kSingle, 5);
  CHECK_THROWS_AS(hybrid_loss(kSingle, uniform, {1.0, 0.0}), ZeroPriorError);
}

TEST_CASE("generative loss against enumeration and closed uniform value") {
  const InputSequence x = single_label_input(3);  // T = 12
  const LabelTopology topo = kSingle;
  // theta = 0: every emission is 1/2, every path weighs 2^-T.
  const double uniform_loss = generative_loss(topo, emissions(GenerativeModel{}), x);
  const BigInt total = count_alignments(topo, x.T()).total;
  CHECK(uniform_loss ==
        Catch::Approx(-std::log(to_double(total) * std::pow(0.5, x.T()))).margin(1e-10));

  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  for (int draw = 0; draw < 25; ++draw) {
    const GenerativeModel model{dist(rng), dist(rng)};
    const EmissionTable emis = emissions(model);
    const auto score = oracle::emission_score(topo, emis, x);
    CHECK(std::abs(generative_loss(topo, emis, x) +
                   std::log(oracle::brute_force_total(topo, x.T(), score))) <= 1e-10);
  }

  // Saturated parameters reach the zero-loss optimum.
  CHECK(generative_loss(topo, emissions(GenerativeModel{50.0, 50.0}), x) ==
        Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("bias gradient at uniform init pulls toward the dominant label") {
  const InputSequence x = block_input({{"B", 1}, {"a", 3}, {"B", 1}}, 2, {{"a", 0}, {"B", 1}});
  const ModelGradient grad =
      model_gradient(uniform_bias(kSingle.alphabet()), LossKind::kCtc, kSingle, x);
  const auto& bias = std::get<BiasModel>(grad.params);
  const int B = 0, a = 1;  // alphabet order of "B* a+ B*"
  // T=5: grad_B = T/2 - c(B)/c(T) = 2.5 - 40/15, grad_a = 2.5 - 35/15.
  CHECK(bias.bias[B] == Catch::Approx(-1.0 / 6.0).margin(1e-12));
  CHECK(bias.bias[a] == Catch::Approx(1.0 / 6.0).margin(1e-12));
  CHECK(bias.bias[B] < bias.bias[a]);
}

TEST_CASE("gradient vanishes where posteriors equal occupancies") {
  // A saturated memory model pins one alignment: p = q exactly (in floats).
  const auto alignment = testing::runs({{"B", 3}, {"a", 1}, {"B", 4}});
  MemoryModel mem = uniform_memory(8, {"B", "a"});
  for (int t = 0; t < 8; ++t) {
    mem.memory[t][0] = alignment[t] == "B" ? 40.0 : -40.0;
    mem.memory[t][1] = alignment[t] == "a" ? 40.0 : -40.0;
  }
  const InputSequence x = block_input({{"B", 8}}, 2, {{"B", 1}});
  const ModelGradient grad = model_gradient(ModelSpec{mem}, LossKind::kCtc, kSingle, x);
  for (double v : flatten_parameters(grad.params)) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("analytic gradients match central differences") {
  // The full 100-draw sweep runs in the acceptance suite; this keeps a
  // smaller cross-section in the unit tests.
  const auto results = verify::verify_gradcheck(20, 1234);
  for (const auto& r : results) {
    INFO(r.name << " " << r.detail);
    CHECK(r.pass);
  }
}

TEST_CASE("errors for incompatible pairings and empty mass") {
  const InputSequence x = single_label_input(2);
  CHECK_THROWS_AS(model_gradient(GenerativeModel{}, LossKind::kCtc, kSingle, x),
                  std::invalid_argument);
  CHECK_THROWS_AS(model_gradient(uniform_bias({"a", "B"}), LossKind::kGenerative, kSingle, x),
                  std::invalid_argument);
  CHECK_THROWS_AS(model_gradient(uniform_bias({"a", "B"}), LossKind::kHybrid, kSingle, x),
                  std::invalid_argument);

  // Zero path mass: sharp posteriors on an invalid alignment.
  const PosteriorTable bad = testing::sharp_posteriors({"B", "a"}, testing::runs({{"B", 5}}));
  CHECK(full_sum_log_prob(kSingle, bad) == kNegInf);
  CHECK(ctc_loss(kSingle, bad) == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(soft_alignment(kSingle, bad), ZeroPathMassError);

  // Structural impossibility throws instead.
  const PosteriorTable two = uniform_posteriors(ctc_topology({"a", "b", "c"}, "B"), 2);
  CHECK_THROWS_AS(full_sum_log_prob(ctc_topology({"a", "b", "c"}, "B"), two), NoAlignmentError);
}

TEST_CASE("soft alignment csv format") {
  const PosteriorTable post = testing::sharp_posteriors({"B", "a"}, {"a"});
  std::ostringstream os;
  write_soft_alignment_csv(soft_alignment(kSingle, post), os);
  CHECK(os.str() == "t,label,q\n1,B,0\n1,a,1\n");
}
