#include "pcgeval/pcg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pcgeval {

int Chromosome::active_count() const {
    int count = 0;
    for (auto gene : genes) {
        count += gene != 0 ? 1 : 0;
    }
    return count;
}

std::array<int, 3> Chromosome::active_attrs() const {
    if (active_count() != 3) {
        throw std::logic_error("Chromosome: expected exactly 3 active genes");
    }
    std::array<int, 3> attrs{};
    int k = 0;
    for (int attr = 0; attr < kNumAttrs; ++attr) {
        if (genes[attr] != 0) {
            attrs[k++] = attr;
        }
    }
    return attrs;
}

void GaParams::validate() const {
    if (population_size < 4 || population_size % 2 != 0) {
        throw std::invalid_argument("GaParams: population size must be even and >= 4");
    }
    if (mutation_prob < 0.0 || mutation_prob > 1.0) {
        throw std::invalid_argument("GaParams: mutation probability must be in [0, 1]");
    }
    if (!(delta > 0.0) || !(v3_step > 0.0)) {
        throw std::invalid_argument("GaParams: delta and v3_step must be positive");
    }
}

namespace {

// Draws k distinct attributes in order via partial Fisher-Yates: uniform over
// ordered k-tuples, hence uniform over subsets and over orderings within one.
std::array<int, 3> draw_three_distinct(Rng& rng) {
    std::array<int, kNumAttrs> pool{};
    std::iota(pool.begin(), pool.end(), 0);
    std::array<int, 3> picked{};
    for (int i = 0; i < 3; ++i) {
        const int j = i + static_cast<int>(rng.uniform_below(kNumAttrs - i));
        std::swap(pool[i], pool[j]);
        picked[i] = pool[i];
    }
    return picked;
}

} // namespace

NpcProfile random_profile(Rng& rng) { return NpcProfile{draw_three_distinct(rng)}; }

Chromosome random_chromosome(Rng& rng) {
    Chromosome c;
    for (int attr : draw_three_distinct(rng)) {
        c.genes[attr] = 1;
    }
    return c;
}

NpcProfile profile_from_chromosome(const Chromosome& chromosome, Rng& rng) {
    std::array<int, 3> attrs = chromosome.active_attrs();
    for (int i = 0; i < 2; ++i) {
        const int j = i + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(3 - i)));
        std::swap(attrs[i], attrs[j]);
    }
    return NpcProfile{attrs};
}

GaState init_population(const GaParams& params, Rng& rng) {
    params.validate();
    GaState state;
    state.population.members.reserve(static_cast<std::size_t>(params.population_size));
    for (int i = 0; i < params.population_size; ++i) {
        state.population.members.push_back(random_chromosome(rng));
    }
    return state;
}

DeltaVector weight_deltas(const DuelReport& report, const GaParams& params) {
    DeltaVector d{};
    const double step = params.delta;
    for (int attr = 0; attr < kNumAttrs; ++attr) {
        if (report.outcome == DuelOutcome::Win) {
            d[attr] = step * (report.npc_args_not_destroyed[attr] +
                              report.played_incorrectly[attr] + report.unplayed[attr]) -
                      step * report.played_correctly[attr];
        } else {
            // No rule exists for correct/incorrect plays on a loss.
            d[attr] = -step * report.npc_args_not_destroyed[attr] + step * report.unplayed[attr];
        }
    }
    return d;
}

WeightVector apply_update(const WeightVector& weights, const DeltaVector& deltas,
                          PcgVersion version, const GaParams& params) {
    WeightVector next = weights;
    switch (version) {
    case PcgVersion::V2Raw:
        for (int attr = 0; attr < kNumAttrs; ++attr) {
            next[attr] += deltas[attr];
        }
        break;
    case PcgVersion::V3Normalized: {
        double mean = 0.0;
        for (double d : deltas) {
            mean += d;
        }
        mean /= kNumAttrs;
        double var = 0.0;
        for (double d : deltas) {
            var += (d - mean) * (d - mean);
        }
        var /= kNumAttrs;
        const double sd = std::sqrt(var);
        if (sd > 0.0) {
            for (int attr = 0; attr < kNumAttrs; ++attr) {
                next[attr] += params.v3_step * (deltas[attr] - mean) / sd;
            }
        }
        break;
    }
    case PcgVersion::V1Random:
        throw std::logic_error("apply_update: V1 has no weights");
    }
    return next;
}

double fitness(const Chromosome& chromosome, const WeightVector& weights) {
    double sum = 0.0;
    for (int attr = 0; attr < kNumAttrs; ++attr) {
        if (chromosome.genes[attr] != 0) {
            sum += weights[attr];
        }
    }
    return sum;
}

std::vector<int> select_parent_indices(const Population& population,
                                       const WeightVector& weights, const GaParams& params) {
    const int p = static_cast<int>(population.members.size());
    if (p != params.population_size) {
        throw std::invalid_argument("select_parent_indices: population size mismatch");
    }
    std::vector<int> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return fitness(population.members[static_cast<std::size_t>(a)], weights) >
               fitness(population.members[static_cast<std::size_t>(b)], weights);
    });
    order.resize(static_cast<std::size_t>(p / 2));
    return order;
}

std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, int cut) {
    if (cut < 1 || cut > kNumAttrs - 1) {
        throw std::invalid_argument("crossover: cut must be in [1, 6]");
    }
    Chromosome child1;
    Chromosome child2;
    for (int gene = 0; gene < kNumAttrs; ++gene) {
        child1.genes[gene] = gene < cut ? a.genes[gene] : b.genes[gene];
        child2.genes[gene] = gene < cut ? b.genes[gene] : a.genes[gene];
    }
    return {child1, child2};
}

Chromosome repair(Chromosome chromosome, Rng& rng) {
    int active = chromosome.active_count();
    while (active > 3) {
        int pick = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(active)));
        for (int gene = 0; gene < kNumAttrs; ++gene) {
            if (chromosome.genes[gene] != 0 && pick-- == 0) {
                chromosome.genes[gene] = 0;
                break;
            }
        }
        --active;
    }
    while (active < 3) {
        int pick = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(kNumAttrs - active)));
        for (int gene = 0; gene < kNumAttrs; ++gene) {
            if (chromosome.genes[gene] == 0 && pick-- == 0) {
                chromosome.genes[gene] = 1;
                break;
            }
        }
        ++active;
    }
    return chromosome;
}

Population next_generation(const Population& population, const WeightVector& weights,
                           const GaParams& params, Rng& rng) {
    const std::vector<int> parents = select_parent_indices(population, weights, params);

    Population next;
    next.generation_index = population.generation_index + 1;
    next.members.reserve(population.members.size());

    const auto pool_size = static_cast<std::uint64_t>(parents.size());
    for (int pair = 0; pair < params.population_size / 2; ++pair) {
        const Chromosome& parent_a =
            population.members[static_cast<std::size_t>(parents[rng.uniform_below(pool_size)])];
        const Chromosome& parent_b =
            population.members[static_cast<std::size_t>(parents[rng.uniform_below(pool_size)])];
        const int cut = rng.uniform_int(1, kNumAttrs - 1);
        auto [child1, child2] = crossover(parent_a, parent_b, cut);

        for (Chromosome* child : {&child1, &child2}) {
            if (rng.bernoulli(params.mutation_prob)) {
                const int gene = static_cast<int>(rng.uniform_below(kNumAttrs));
                child->genes[gene] ^= 1;
            }
            next.members.push_back(repair(*child, rng));
        }
    }
    return next;
}

PcgSystem::PcgSystem(PcgVersion version, GaParams params, Rng& rng)
    : version_(version), params_(params) {
    params_.validate();
    if (version_ != PcgVersion::V1Random) {
        state_ = init_population(params_, rng);
    }
}

NpcProfile PcgSystem::sample_opponent(Rng& rng) const {
    if (version_ == PcgVersion::V1Random) {
        return random_profile(rng);
    }
    if (state_.population.members.empty()) {
        throw std::logic_error("PcgSystem: empty population");
    }
    const auto idx = rng.uniform_below(state_.population.members.size());
    return profile_from_chromosome(state_.population.members[idx], rng);
}

void PcgSystem::on_duel_end(const DuelReport& report, Rng& rng) {
    if (version_ == PcgVersion::V1Random) {
        return;
    }
    state_.weights = apply_update(state_.weights, weight_deltas(report, params_), version_, params_);
    state_.population = next_generation(state_.population, state_.weights, params_, rng);
}

} // namespace pcgeval
