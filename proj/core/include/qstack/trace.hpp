#pragma once

#include <vector>

#include "qstack/dynamics.hpp"

namespace qstack {

enum class Termination { Reached, Timeout, Diverged };

const char* to_string(Termination t);

/// One executed sampling interval. `stage` is the stage-cost integral over
/// [t, t+delta] discounted relative to the interval start, i.e. the exact
/// quantity the critic TD targets use; episode-level discounting is applied
/// when intervals are chained (see accumulate_episode).
struct TraceRecord {
  double t = 0.0;
  State state;
  Action action;
  double stage = 0.0;
};

/// Realized closed-loop episode. Records are spaced exactly delta apart;
/// total_cost always equals accumulate_episode() of the records.
struct EpisodeTrace {
  double t0 = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
  std::vector<TraceRecord> records;
  State final_state;
  double final_time = 0.0;
  Termination reason = Termination::Timeout;
  double total_cost = 0.0;
};

}  // namespace qstack
