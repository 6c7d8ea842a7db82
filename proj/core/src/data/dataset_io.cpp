#include "deer/data/dataset_io.hpp"

#include "deer/nn/binary_io.hpp"

namespace deer::data {

namespace {

constexpr char kMagic[8] = {'D', 'E', 'E', 'R', 'D', 'A', 'T', 'A'};

}  // namespace

std::string Dataset::to_bytes() const {
    nn::ByteWriter w;
    w.put_raw(kMagic, sizeof(kMagic));
    w.put<std::uint32_t>(kVersion);
    w.put_string(meta.dump());
    w.put<std::int32_t>(max_delay);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(delay_set.size()));
    for (int d : delay_set) w.put<std::int32_t>(d);

    w.put<std::uint64_t>(store.trajectories.size());
    for (const auto& traj : store.trajectories) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(traj.provenance));
        w.put<std::uint64_t>(traj.steps.size());
        for (const auto& s : traj.steps) {
            w.put_vector(s.state);
            w.put_vector(s.action);
            w.put<double>(s.reward);
            w.put_vector(s.next_state);
            w.put<std::uint8_t>(s.done ? 1 : 0);
        }
    }

    w.put<std::uint64_t>(samples.size());
    for (const auto& r : samples) {
        w.put<std::uint32_t>(r.trajectory);
        w.put<std::uint32_t>(r.start);
        w.put<std::uint16_t>(r.delay);
    }
    return w.take();
}

Dataset Dataset::from_bytes(const std::string& bytes) {
    nn::ByteReader r(bytes);
    r.expect(kMagic, sizeof(kMagic), "dataset");
    const auto version = r.get<std::uint32_t>();
    if (version != kVersion) throw std::runtime_error("dataset: unsupported version " + std::to_string(version));
    Dataset ds;
    ds.meta = nlohmann::json::parse(r.get_string());
    ds.max_delay = r.get<std::int32_t>();
    const auto n_delays = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_delays; ++i) ds.delay_set.insert(r.get<std::int32_t>());

    const auto n_traj = r.get<std::uint64_t>();
    ds.store.trajectories.resize(n_traj);
    for (auto& traj : ds.store.trajectories) {
        traj.provenance = static_cast<Provenance>(r.get<std::uint8_t>());
        traj.steps.resize(r.get<std::uint64_t>());
        for (auto& s : traj.steps) {
            s.state = r.get_vector();
            s.action = r.get_vector();
            s.reward = r.get<double>();
            s.next_state = r.get_vector();
            s.done = r.get<std::uint8_t>() != 0;
        }
    }

    ds.samples.resize(r.get<std::uint64_t>());
    for (auto& ref : ds.samples) {
        ref.trajectory = r.get<std::uint32_t>();
        ref.start = r.get<std::uint32_t>();
        ref.delay = r.get<std::uint16_t>();
    }
    if (!r.at_end()) throw std::runtime_error("dataset: trailing bytes");
    return ds;
}

void Dataset::save(const std::filesystem::path& path) const { nn::write_file(path, to_bytes()); }

Dataset Dataset::load(const std::filesystem::path& path) { return from_bytes(nn::read_file(path)); }

}  // namespace deer::data
