#include <doctest.h>

#include <cmath>

#include "mtrl/a2c/a2c.hpp"
#include "mtrl/distill/distill.hpp"
#include "mtrl/errors.hpp"
#include "mtrl/nn/grad_check.hpp"

using namespace mtrl;
using namespace mtrl::distill;
using policy::ActorNetwork;

namespace {

ActorNetwork make_actor(std::uint64_t seed, std::size_t heads = 1) {
  Rng rng(seed);
  return ActorNetwork::make(2, 2, heads, rng);
}

DistillBatch fixed_batch(const ActorNetwork& teacher, std::size_t n, std::uint64_t seed,
                         std::size_t env_id = 0) {
  Rng rng(seed);
  DistillBatch batch;
  batch.env_id = env_id;
  for (std::size_t i = 0; i < n; ++i) {
    const env::Observation obs{rng.uniform(-2, 8), rng.uniform(0, 1)};
    batch.observations.push_back(obs);
    batch.teacher_params.push_back(teacher.policy(obs, 0));
  }
  return batch;
}

// A teacher whose policy is clearly separated from a freshly initialised student.
ActorNetwork make_distinct_teacher(std::uint64_t seed) {
  auto teacher = make_actor(seed);
  nn::Tensor& out_bias = *teacher.net().parameters().back();
  out_bias(0, 0) = 0.8;
  out_bias(1, 0) = -0.6;
  out_bias(2, 0) = -1.5;
  out_bias(3, 0) = 0.5;
  return teacher;
}

std::vector<nn::Tensor> snapshot(const mtrl::nn::Mlp& mlp) {
  std::vector<nn::Tensor> out;
  for (const auto* p : mlp.parameters()) out.push_back(*p);
  return out;
}

}  // namespace

TEST_CASE("collect_distill_batch: p_student = 0 always follows the teacher") {
  const auto teacher = make_actor(1);
  const auto s1 = make_actor(2), s2 = make_actor(3);
  DistillConfig cfg;
  cfg.p_student = 0.0;
  cfg.batch_segments = 10;
  env::EnvCursor c1(env::make_variant("Base")), c2(env::make_variant("Base"));
  Rng r1(4), r2(4);
  const auto a = collect_distill_batch(c1, teacher, s1, 0, cfg, r1);
  const auto b = collect_distill_batch(c2, teacher, s2, 0, cfg, r2);
  CHECK(a.student_segments == 0);
  CHECK(a.segments == 10);
  CHECK(a.size() == 50);
  CHECK(a.observations == b.observations);
}

TEST_CASE("collect_distill_batch: p_student = 1 always follows the student") {
  const auto student = make_actor(5);
  const auto t1 = make_actor(6), t2 = make_actor(7);
  DistillConfig cfg;
  cfg.p_student = 1.0;
  cfg.batch_segments = 10;
  env::EnvCursor c1(env::make_variant("Base")), c2(env::make_variant("Base"));
  Rng r1(8), r2(8);
  const auto a = collect_distill_batch(c1, t1, student, 0, cfg, r1);
  const auto b = collect_distill_batch(c2, t2, student, 0, cfg, r2);
  CHECK(a.student_segments == 10);
  CHECK(a.observations == b.observations);
}

TEST_CASE("collect_distill_batch records the teacher's policy at each observation") {
  const auto teacher = make_actor(9);
  const auto student = make_actor(10, 3);
  DistillConfig cfg;
  cfg.batch_segments = 4;
  env::EnvCursor cursor(env::make_variant("BigMass"));
  Rng rng(11);
  const auto batch = collect_distill_batch(cursor, teacher, student, 2, cfg, rng);
  CHECK(batch.env_id == 2);
  REQUIRE(batch.teacher_params.size() == batch.observations.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    CHECK(batch.teacher_params[i] == teacher.policy(batch.observations[i], 0));
}

TEST_CASE("collect_distill_batch: student fraction within the CLT bound") {
  const auto teacher = make_actor(12), student = make_actor(13);
  DistillConfig cfg;
  cfg.p_student = 0.5;
  cfg.batch_segments = 100;
  env::EnvCursor cursor(env::make_variant("Base"));
  Rng rng(14);
  int student_segments = 0, segments = 0;
  for (int i = 0; i < 100; ++i) {
    const auto batch = collect_distill_batch(cursor, teacher, student, 0, cfg, rng);
    student_segments += batch.student_segments;
    segments += batch.segments;
  }
  REQUIRE(segments == 10000);
  const double frac = static_cast<double>(student_segments) / segments;
  CHECK(std::abs(frac - 0.5) <= 4.0 * std::sqrt(0.25 / 1e4));
}

TEST_CASE("distill_loss is the batch mean of the per-observation KL") {
  const auto teacher = make_actor(15);
  const auto student = make_actor(16, 2);
  const auto batch = fixed_batch(teacher, 7, 17, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    sum += policy::kl_diag_gaussian(batch.teacher_params[i], student.policy(batch.observations[i], 1));
  CHECK(distill_loss(student, batch) == doctest::Approx(sum / 7.0).epsilon(1e-13));
  CHECK(distill_gradients(student, batch).first ==
        doctest::Approx(distill_loss(student, batch)).epsilon(1e-14));
}

TEST_CASE("distill: student equal to teacher has zero loss and gradient") {
  const auto teacher = make_actor(18);
  auto student = teacher;
  const auto batch = fixed_batch(teacher, 5, 19);
  auto [loss, grads] = distill_gradients(student, batch);
  CHECK(loss == 0.0);
  for (const auto* t : student.net().gradient_slots(std::as_const(grads)))
    if (t)
      for (double v : t->values()) CHECK(v == 0.0);
}

TEST_CASE("distill gradients match finite differences") {
  for (std::size_t n : {1u, 6u}) {
    const auto teacher = make_actor(20 + n);
    auto student = make_actor(30 + n, 2);
    const auto batch = fixed_batch(teacher, n, 40 + n, 1);
    auto [loss, grads] = distill_gradients(student, batch);
    const auto analytic = student.net().gradient_slots(std::as_const(grads));
    auto params = student.net().parameters();
    const auto numeric = nn::numeric_gradient(params, [&] { return distill_loss(student, batch); });
    CHECK(nn::max_relative_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("distill_update: loss strictly decreases for 100 steps at lr 1e-3") {
  const auto teacher = make_distinct_teacher(50);
  auto student = make_actor(51);
  const auto batch = fixed_batch(teacher, 5, 52);
  nn::RmsPropState state(std::as_const(student).net().parameters());
  double prev = distill_update(student, batch, state, 1e-3);
  for (int i = 0; i < 100; ++i) {
    const double loss = distill_update(student, batch, state, 1e-3);
    CHECK(loss < prev);
    prev = loss;
  }
}

TEST_CASE("distill_update converges below 1e-3 KL within 1e4 steps on a fixed batch") {
  const auto teacher = make_distinct_teacher(60);
  auto student = make_actor(61);
  const auto batch = fixed_batch(teacher, 5, 62);
  nn::RmsPropState state(std::as_const(student).net().parameters());
  int steps = 0;
  double loss = distill_loss(student, batch);
  while (loss >= 1e-3 && steps < 10000) {
    distill_update(student, batch, state, 1e-3);
    loss = distill_loss(student, batch);
    ++steps;
  }
  CHECK(loss < 1e-3);
  MESSAGE("converged after " << steps << " steps");
}

TEST_CASE("distill_update leaves other heads bitwise unchanged") {
  const auto teacher = make_actor(70);
  auto student = make_actor(71, 3);
  const auto head0 = snapshot(student.net().head(0));
  const auto head2 = snapshot(student.net().head(2));
  const auto head1 = snapshot(student.net().head(1));
  const auto trunk = snapshot(student.net().trunk());
  nn::RmsPropState state(std::as_const(student).net().parameters());
  for (int i = 0; i < 10; ++i) distill_update(student, fixed_batch(teacher, 5, 72 + i, 1), state, 1e-3);
  CHECK(snapshot(student.net().head(0)) == head0);
  CHECK(snapshot(student.net().head(2)) == head2);
  CHECK(snapshot(student.net().head(1)) != head1);
  CHECK(snapshot(student.net().trunk()) != trunk);
}

TEST_CASE("distill_update: non-finite loss aborts") {
  const auto teacher = make_actor(80);
  auto student = make_actor(81);
  auto batch = fixed_batch(teacher, 3, 82);
  batch.teacher_params[1].mean[0] = std::numeric_limits<double>::infinity();
  nn::RmsPropState state(std::as_const(student).net().parameters());
  const auto before = student;
  CHECK_THROWS_AS(distill_update(student, batch, state, 1e-3), NonFiniteError);
  CHECK(student == before);
}

TEST_CASE("train_distill_multitask: teachers are bitwise unchanged") {
  std::vector<ActorNetwork> teachers{make_actor(90), make_actor(91)};
  const auto copies = teachers;
  DistillConfig cfg;
  cfg.total_env_steps = 500;
  cfg.eval_every = 250;
  cfg.eval_rollouts = 2;
  const auto result = train_distill_multitask({"SmallMass", "BigDrag"}, teachers, cfg);
  CHECK(teachers[0] == copies[0]);
  CHECK(teachers[1] == copies[1]);
  CHECK(result.checkpoint.kind == "distill");
  CHECK_FALSE(result.checkpoint.critic.has_value());
  CHECK(result.checkpoint.actor.num_heads() == 2);
  CHECK(result.checkpoint.config.at("p_student") == "1");
  REQUIRE(result.kl.size() == 2);
  CHECK(result.kl[0].batch_kl.size() == 100);
  CHECK(result.curves.size() == 4);
  for (const auto& row : result.curves) CHECK((row.env_steps == 250 || row.env_steps == 500));
}

TEST_CASE("train_distill_multitask: zero budget leaves the student at initialisation") {
  std::vector<ActorNetwork> teachers{make_actor(100), make_actor(101)};
  DistillConfig cfg;
  cfg.total_env_steps = 0;
  cfg.seed = 6;
  const auto result = train_distill_multitask({"Base", "BigForce"}, teachers, cfg);
  Rng init(a2c::derive_seed(6, a2c::Stream::Init));
  CHECK(result.checkpoint.actor == ActorNetwork::make(2, 2, 2, init));
  CHECK(result.curves.empty());
}

TEST_CASE("train_distill_multitask: one environment equals single distillation with p_student = 1") {
  const std::vector<ActorNetwork> teachers{make_actor(110)};
  DistillConfig cfg;
  cfg.total_env_steps = 300;
  cfg.eval_every = 0;
  cfg.eval_rollouts = 2;
  const auto multi = train_distill_multitask({"Base"}, teachers, cfg);
  cfg.p_student = 1.0;
  const auto single = train_distill_single("Base", teachers[0], cfg);
  CHECK(multi.checkpoint == single.checkpoint);
  CHECK(multi.curves == single.curves);
}

TEST_CASE("train_distill_multitask: teacher/environment count mismatch") {
  const std::vector<ActorNetwork> teachers{make_actor(120)};
  CHECK_THROWS_AS(train_distill_multitask({"Base", "BigMass"}, teachers, DistillConfig{}),
                  std::invalid_argument);
}

TEST_CASE("a train_single checkpoint serves as a distillation teacher") {
  a2c::TrainConfig tc;
  tc.total_env_steps = 500;
  tc.eval_every = 0;
  tc.eval_rollouts = 1;
  const auto trained = a2c::train_single("SmallForce", tc);
  const auto loaded = io::deserialize_checkpoint(io::serialize_checkpoint(trained.checkpoint));
  DistillConfig cfg;
  cfg.total_env_steps = 200;
  cfg.eval_every = 0;
  cfg.eval_rollouts = 1;
  const auto result = train_distill_single("SmallForce", loaded.actor, cfg);
  CHECK(result.kl[0].batch_kl.size() == 40);
}

TEST_CASE("DistillConfig validation") {
  DistillConfig cfg;
  CHECK(cfg.p_teacher() == 0.5);
  cfg.p_student = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = DistillConfig{};
  cfg.t_max = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  const auto kv = io::KeyValues::parse("p_student = 0.25\nlr = 0.001\n");
  const auto over = DistillConfig::from_key_values(kv);
  CHECK(over.p_student == 0.25);
  CHECK(over.p_teacher() == 0.75);
  CHECK(over.lr == 0.001);
}
