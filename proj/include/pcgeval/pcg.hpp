#pragma once

#include "pcgeval/duel.hpp"
#include "pcgeval/rng.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace pcgeval {

// 7 binary genes, exactly 3 active. A chromosome encodes which attributes an
// NPC profile draws from; the ordering is decided at sampling time.
struct Chromosome {
    std::array<std::uint8_t, kNumAttrs> genes{};

    int active_count() const;
    std::array<int, 3> active_attrs() const; // requires exactly 3 active genes
    bool operator==(const Chromosome&) const = default;
};

using WeightVector = std::array<double, kNumAttrs>;
using DeltaVector = std::array<double, kNumAttrs>;

struct Population {
    std::vector<Chromosome> members;
    std::int64_t generation_index = 0;
    bool operator==(const Population&) const = default;
};

enum class PcgVersion : std::uint8_t {
    V1Random = 1,     // attributes drawn uniformly, no adaptation
    V2Raw = 2,        // GA, weight deltas applied as-is
    V3Normalized = 3, // GA, weight deltas z-scored per duel before applying
};

struct GaParams {
    int population_size = 10;
    double mutation_prob = 0.05;
    double delta = 1.0;   // step applied per fitness-rule event
    double v3_step = 0.5; // scale of the normalized update

    void validate() const; // throws std::invalid_argument
    bool operator==(const GaParams&) const = default;
};

// Uniform over the 35 attribute subsets and the 6 orderings of each.
NpcProfile random_profile(Rng& rng);

// Uniform over the 35 subsets.
Chromosome random_chromosome(Rng& rng);

// Orders the chromosome's active attributes by a uniformly random permutation.
NpcProfile profile_from_chromosome(const Chromosome& chromosome, Rng& rng);

// P random chromosomes plus all-zero weights.
struct GaState {
    Population population;
    WeightVector weights{};
    bool operator==(const GaState&) const = default;
};
GaState init_population(const GaParams& params, Rng& rng);

// The per-duel weight adjustment derived from the fitness rules: on a win,
// undestroyed NPC arguments, incorrect plays and unplayed cards push the
// weight up while correct plays pull it down; on a loss, undestroyed
// arguments pull down and unplayed cards push up.
DeltaVector weight_deltas(const DuelReport& report, const GaParams& params);

// V2 adds the deltas directly. V3 z-scores the 7-component delta vector
// (population standard deviation) and applies it scaled by v3_step; a
// zero-variance delta leaves the weights unchanged.
WeightVector apply_update(const WeightVector& weights, const DeltaVector& deltas,
                          PcgVersion version, const GaParams& params);

double fitness(const Chromosome& chromosome, const WeightVector& weights);

// Indices of the top population_size/2 chromosomes by fitness, ties broken
// by lower member index.
std::vector<int> select_parent_indices(const Population& population,
                                       const WeightVector& weights, const GaParams& params);

// Selection, random pairing with replacement, single-point crossover,
// one-gene mutation with probability mutation_prob, then repair to exactly
// 3 active genes.
Population next_generation(const Population& population, const WeightVector& weights,
                           const GaParams& params, Rng& rng);

// Exposed for direct testing of the crossover/repair steps.
std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, int cut);
Chromosome repair(Chromosome chromosome, Rng& rng);

// Per-run PCG state: samples opponents and, for the GA versions, evolves
// after every duel.
class PcgSystem {
public:
    PcgSystem(PcgVersion version, GaParams params, Rng& rng);

    PcgVersion version() const { return version_; }
    const GaParams& params() const { return params_; }

    NpcProfile sample_opponent(Rng& rng) const;
    void on_duel_end(const DuelReport& report, Rng& rng);

    const WeightVector& weights() const { return state_.weights; }
    const Population& population() const { return state_.population; }

    // Checkpoint support.
    const GaState& state() const { return state_; }
    void restore(GaState state) { state_ = std::move(state); }

    bool operator==(const PcgSystem&) const = default;

private:
    PcgVersion version_;
    GaParams params_;
    GaState state_; // unused for V1
};

} // namespace pcgeval
