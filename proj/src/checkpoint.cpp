#include "pcgeval/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace pcgeval {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'P', 'C', 'G', 'C'};

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void f64_block(std::span<const double> values) {
        u64(values.size());
        for (double v : values) f64(v);
    }
    void i32_block(std::span<const int> values) {
        u64(values.size());
        for (int v : values) i32(v);
    }

    std::size_t size() const { return bytes_.size(); }
    std::span<const std::uint8_t> view() const { return bytes_; }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::vector<double> f64_block() {
        const std::uint64_t n = u64();
        need(n * 8);
        std::vector<double> values(n);
        for (auto& v : values) v = f64();
        return values;
    }
    std::vector<int> i32_block() {
        const std::uint64_t n = u64();
        need(n * 4);
        std::vector<int> values(n);
        for (auto& v : values) v = i32();
        return values;
    }

    std::size_t pos() const { return pos_; }

private:
    void need(std::uint64_t n) const {
        if (pos_ + n > bytes_.size()) {
            throw CheckpointError("checkpoint truncated");
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void write_rng(ByteWriter& w, const std::array<std::uint64_t, 4>& state) {
    for (std::uint64_t word : state) w.u64(word);
}

std::array<std::uint64_t, 4> read_rng(ByteReader& r) {
    std::array<std::uint64_t, 4> state{};
    for (auto& word : state) word = r.u64();
    return state;
}

void write_ga_state(ByteWriter& w, const GaState& state) {
    for (double weight : state.weights) w.f64(weight);
    w.u32(static_cast<std::uint32_t>(state.population.members.size()));
    for (const Chromosome& c : state.population.members) {
        for (std::uint8_t gene : c.genes) w.u8(gene);
    }
    w.i64(state.population.generation_index);
}

GaState read_ga_state(ByteReader& r) {
    GaState state;
    for (double& weight : state.weights) weight = r.f64();
    const std::uint32_t members = r.u32();
    state.population.members.resize(members);
    for (Chromosome& c : state.population.members) {
        for (std::uint8_t& gene : c.genes) gene = r.u8();
    }
    state.population.generation_index = r.i64();
    return state;
}

void write_duel(ByteWriter& w, const DuelState::Raw& duel) {
    for (int attr : duel.profile.attrs) w.i32(attr);
    w.i32(duel.config.args_per_attribute);
    w.i32(duel.config.copies_per_attribute_in_deck);
    w.i32(duel.config.initial_hand_size);
    w.i32(duel.config.turn_limit);
    w.i32_block(duel.queue);
    for (int c : duel.hand) w.i32(c);
    w.i32_block(duel.deck);
    w.i32(duel.turns_used);
    for (int c : duel.played_correctly) w.i32(c);
    for (int c : duel.played_incorrectly) w.i32(c);
    for (int c : duel.args_destroyed) w.i32(c);
    w.u8(duel.outcome.has_value() ? (*duel.outcome == DuelOutcome::Win ? 1 : 2) : 0);
    write_rng(w, duel.rng_state);
}

DuelState::Raw read_duel(ByteReader& r) {
    DuelState::Raw duel{};
    for (int& attr : duel.profile.attrs) attr = r.i32();
    duel.config.args_per_attribute = r.i32();
    duel.config.copies_per_attribute_in_deck = r.i32();
    duel.config.initial_hand_size = r.i32();
    duel.config.turn_limit = r.i32();
    duel.queue = r.i32_block();
    for (int& c : duel.hand) c = r.i32();
    duel.deck = r.i32_block();
    duel.turns_used = r.i32();
    for (int& c : duel.played_correctly) c = r.i32();
    for (int& c : duel.played_incorrectly) c = r.i32();
    for (int& c : duel.args_destroyed) c = r.i32();
    switch (r.u8()) {
    case 0: duel.outcome.reset(); break;
    case 1: duel.outcome = DuelOutcome::Win; break;
    case 2: duel.outcome = DuelOutcome::Loss; break;
    default: throw CheckpointError("checkpoint corrupt: bad duel outcome tag");
    }
    duel.rng_state = read_rng(r);
    return duel;
}

} // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (std::uint8_t b : bytes) {
        hash ^= b;
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ck) {
    ByteWriter w;
    for (std::uint8_t b : kMagic) w.u8(b);
    w.u32(Checkpoint::kFormatVersion);

    // Architecture + hyperparameters.
    w.i32(ck.obs_dim);
    w.i32(ck.action_dim);
    w.i32_block(ck.hidden);
    w.i32(ck.hyper.n_steps);
    w.i32(ck.hyper.batch_size);
    w.i32(ck.hyper.n_epochs);
    w.f64(ck.hyper.vf_coef);
    w.f64(ck.hyper.clip_range);
    w.f64(ck.hyper.gamma);
    w.f64(ck.hyper.gae_lambda);
    w.f64(ck.hyper.learning_rate);
    w.f64(ck.hyper.entropy_coef);
    w.f64(ck.hyper.max_grad_norm);

    w.i32(ck.duel_config.args_per_attribute);
    w.i32(ck.duel_config.copies_per_attribute_in_deck);
    w.i32(ck.duel_config.initial_hand_size);
    w.i32(ck.duel_config.turn_limit);
    w.f64(ck.reward_config.impactful_reward);
    w.f64(ck.reward_config.win_reward);
    w.f64(ck.reward_config.step_penalty);

    w.u8(static_cast<std::uint8_t>(ck.version));
    w.i32(ck.ga.population_size);
    w.f64(ck.ga.mutation_prob);
    w.f64(ck.ga.delta);
    w.f64(ck.ga.v3_step);

    w.u64(ck.run_seed);
    w.u64(ck.sga_count);
    write_rng(w, ck.agent_rng_state);

    // Parameter block (params + Adam moments) with its own checksum.
    ByteWriter block;
    block.f64_block(ck.params);
    block.f64_block(ck.adam.m);
    block.f64_block(ck.adam.v);
    block.i64(ck.adam.step);
    const std::uint64_t block_hash = fnv1a64(block.view());
    const std::vector<std::uint8_t> block_bytes = block.take();
    w.u64(block_bytes.size());
    for (std::uint8_t b : block_bytes) w.u8(b);
    w.u64(block_hash);

    write_ga_state(w, ck.pcg_state);

    w.u8(ck.has_resume ? 1 : 0);
    if (ck.has_resume) {
        write_duel(w, ck.duel);
        write_rng(w, ck.env_rng_state);
        w.u8(ck.fresh_duel ? 1 : 0);
        w.f64(ck.logger.cumulative_reward);
        w.u64(ck.logger.games_total);
        w.u64(ck.logger.wins_total);
        w.u64(ck.logger.window_games);
        w.u64(ck.logger.window_wins);
        w.u64(ck.logger.npcs_seen);
        w.u32(static_cast<std::uint32_t>(ck.logger.npc_history.size()));
        for (const auto& profile : ck.logger.npc_history) {
            for (std::uint8_t attr : profile) w.u8(attr);
        }
    }

    const std::uint64_t file_hash = fnv1a64(w.view());
    w.u64(file_hash);
    return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMagic.size() + 12) {
        throw CheckpointError("checkpoint truncated");
    }

    // Verify the trailing whole-file checksum first.
    ByteReader trailer(bytes.subspan(bytes.size() - 8));
    const std::uint64_t expected = trailer.u64();
    if (fnv1a64(bytes.first(bytes.size() - 8)) != expected) {
        throw CheckpointError("checkpoint corrupt: checksum mismatch");
    }

    ByteReader r(bytes.first(bytes.size() - 8));
    for (std::uint8_t b : kMagic) {
        if (r.u8() != b) {
            throw CheckpointError("checkpoint corrupt: bad magic");
        }
    }
    const std::uint32_t version = r.u32();
    if (version != Checkpoint::kFormatVersion) {
        throw CheckpointError("checkpoint version mismatch");
    }

    Checkpoint ck;
    ck.obs_dim = r.i32();
    ck.action_dim = r.i32();
    ck.hidden = r.i32_block();
    ck.hyper.n_steps = r.i32();
    ck.hyper.batch_size = r.i32();
    ck.hyper.n_epochs = r.i32();
    ck.hyper.vf_coef = r.f64();
    ck.hyper.clip_range = r.f64();
    ck.hyper.gamma = r.f64();
    ck.hyper.gae_lambda = r.f64();
    ck.hyper.learning_rate = r.f64();
    ck.hyper.entropy_coef = r.f64();
    ck.hyper.max_grad_norm = r.f64();

    ck.duel_config.args_per_attribute = r.i32();
    ck.duel_config.copies_per_attribute_in_deck = r.i32();
    ck.duel_config.initial_hand_size = r.i32();
    ck.duel_config.turn_limit = r.i32();
    ck.reward_config.impactful_reward = r.f64();
    ck.reward_config.win_reward = r.f64();
    ck.reward_config.step_penalty = r.f64();

    ck.version = static_cast<PcgVersion>(r.u8());
    ck.ga.population_size = r.i32();
    ck.ga.mutation_prob = r.f64();
    ck.ga.delta = r.f64();
    ck.ga.v3_step = r.f64();

    ck.run_seed = r.u64();
    ck.sga_count = r.u64();
    ck.agent_rng_state = read_rng(r);

    const std::uint64_t block_size = r.u64();
    const std::size_t block_start = r.pos();
    if (block_start + block_size + 8 > bytes.size()) {
        throw CheckpointError("checkpoint truncated");
    }
    const std::uint64_t block_hash =
        fnv1a64(bytes.subspan(block_start, static_cast<std::size_t>(block_size)));
    ck.params = r.f64_block();
    ck.adam.m = r.f64_block();
    ck.adam.v = r.f64_block();
    ck.adam.step = r.i64();
    if (r.pos() != block_start + block_size) {
        throw CheckpointError("checkpoint corrupt: parameter block size mismatch");
    }
    if (r.u64() != block_hash) {
        throw CheckpointError("checkpoint corrupt: parameter block checksum mismatch");
    }

    ck.pcg_state = read_ga_state(r);

    ck.has_resume = r.u8() != 0;
    if (ck.has_resume) {
        ck.duel = read_duel(r);
        ck.env_rng_state = read_rng(r);
        ck.fresh_duel = r.u8() != 0;
        ck.logger.cumulative_reward = r.f64();
        ck.logger.games_total = r.u64();
        ck.logger.wins_total = r.u64();
        ck.logger.window_games = r.u64();
        ck.logger.window_wins = r.u64();
        ck.logger.npcs_seen = r.u64();
        const std::uint32_t history = r.u32();
        ck.logger.npc_history.resize(history);
        for (auto& profile : ck.logger.npc_history) {
            for (std::uint8_t& attr : profile) attr = r.u8();
        }
    }
    return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = serialize_checkpoint(checkpoint);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw CheckpointError("cannot open checkpoint file for writing: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw CheckpointError("checkpoint write failed: " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("cannot open checkpoint file: " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file for hashing: " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return fnv1a64(bytes);
}

} // namespace pcgeval
