#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtrl/env/cheetah_lite.hpp"
#include "mtrl/eval/curve.hpp"
#include "mtrl/io/checkpoint.hpp"
#include "mtrl/io/config.hpp"
#include "mtrl/nn/rmsprop.hpp"
#include "mtrl/policy/networks.hpp"
#include "mtrl/rng.hpp"

namespace mtrl::distill {

struct DistillConfig {
  /// Probability that a segment is rolled out by the student; the teacher acts otherwise.
  double p_student = 0.5;
  int t_max = 5;
  /// Segments per distill_update batch.
  int batch_segments = 1;
  double lr = 0.0007;
  /// Budget per environment.
  long long total_env_steps = 50000;
  long long eval_every = 10000;
  int eval_rollouts = 20;
  bool eval_deterministic = false;
  std::uint64_t seed = 0;
  std::size_t hidden_units = policy::kHiddenUnits;
  /// Batches averaged for the initial / final KL summaries.
  int kl_window = 50;
  bool record_wall_clock = false;

  double p_teacher() const { return 1.0 - p_student; }
  void validate() const;

  static DistillConfig from_key_values(const io::KeyValues& kv, DistillConfig base);
  static DistillConfig from_key_values(const io::KeyValues& kv);
};

std::map<std::string, std::string> to_key_values(const DistillConfig& config);

/// Observations visited during collection and the teacher's policy at each.
struct DistillBatch {
  std::vector<env::Observation> observations;
  std::vector<policy::GaussianPolicyParams> teacher_params;
  std::size_t env_id = 0;
  /// Segments rolled out by the student (the rest by the teacher).
  int student_segments = 0;
  int segments = 0;

  std::size_t size() const { return observations.size(); }
};

/// Collects config.batch_segments segments of up to t_max steps. Before each
/// segment the behaviour policy is drawn: student with probability
/// config.p_student, otherwise teacher (head 0). The cursor resets at episode end.
DistillBatch collect_distill_batch(env::EnvCursor& cursor, const policy::ActorNetwork& teacher,
                                   const policy::ActorNetwork& student, std::size_t head_id,
                                   const DistillConfig& config, Rng& rng);

/// Mean over the batch of kl_diag_gaussian(teacher, student(obs, env_id)).
double distill_loss(const policy::ActorNetwork& student, const DistillBatch& batch);
/// distill_loss and its gradient; only the trunk and head env_id are populated.
std::pair<double, policy::MultiHeadNet::Grads> distill_gradients(
    const policy::ActorNetwork& student, const DistillBatch& batch);

/// One RMSprop step on the student's trunk and head batch.env_id. Teacher
/// params are constants. Returns the mean KL before the step.
/// Throws NonFiniteError if the loss is not finite.
double distill_update(policy::ActorNetwork& student, const DistillBatch& batch,
                      nn::RmsPropState& state, double lr);

/// Per-head KL trace of a distillation run.
struct KlSummary {
  std::string env_name;
  double initial_kl = 0.0;  // mean over the first kl_window batches
  double final_kl = 0.0;    // mean over the last kl_window batches
  std::vector<double> batch_kl;
};

struct DistillResult {
  io::Checkpoint checkpoint;
  std::vector<eval::CurveRow> curves;
  std::vector<KlSummary> kl;
};

/// Multi-task distillation: cycles E_1..E_n, and on each visit collects a
/// student-sampled batch (p_student = 1 regardless of config) and updates
/// head i. The student is actor-only. Throws std::invalid_argument if the
/// teacher count differs from the environment count.
DistillResult train_distill_multitask(const std::vector<std::string>& env_names,
                                      const std::vector<policy::ActorNetwork>& teachers,
                                      const DistillConfig& config);

/// Single-environment distillation into a fresh one-head student, mixing
/// behaviour policies with config.p_student.
DistillResult train_distill_single(const std::string& env_name,
                                   const policy::ActorNetwork& teacher,
                                   const DistillConfig& config);

}  // namespace mtrl::distill
