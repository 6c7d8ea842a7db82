#include "deer/nn/checkpoint.hpp"

#include <algorithm>

#include "deer/nn/binary_io.hpp"

namespace deer::nn {

namespace {

constexpr char kMagic[8] = {'D', 'E', 'E', 'R', 'C', 'K', 'P', 'T'};

}  // namespace

void Checkpoint::add(const ParamList& params) {
    for (const auto& p : params) tensors.emplace_back(p.name, std::vector<double>(p.values.begin(), p.values.end()));
}

const std::vector<double>& Checkpoint::tensor(const std::string& name) const {
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const auto& t) { return t.first == name; });
    if (it == tensors.end()) throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
    return it->second;
}

void Checkpoint::restore(const ParamList& params) const {
    for (const auto& p : params) {
        const auto& src = tensor(p.name);
        if (src.size() != p.values.size())
            throw ShapeError("checkpoint: tensor '" + p.name + "' has " + std::to_string(src.size()) +
                             " entries, model expects " + std::to_string(p.values.size()));
        std::copy(src.begin(), src.end(), p.values.begin());
    }
}

std::string Checkpoint::to_bytes() const {
    ByteWriter out;
    out.put_raw(kMagic, sizeof(kMagic));
    out.put<std::uint32_t>(kVersion);
    out.put_string(meta.dump());
    out.put<std::uint64_t>(tensors.size());
    for (const auto& [name, values] : tensors) {
        out.put_string(name);
        out.put<std::uint64_t>(values.size());
        out.put_doubles(values.data(), values.size());
    }
    return out.take();
}

Checkpoint Checkpoint::from_bytes(const std::string& bytes) {
    ByteReader r(bytes);
    r.expect(kMagic, sizeof(kMagic), "checkpoint");
    const auto version = r.get<std::uint32_t>();
    if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    Checkpoint ckpt;
    ckpt.meta = nlohmann::json::parse(r.get_string());
    const auto count = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string name = r.get_string();
        std::vector<double> values(r.get<std::uint64_t>());
        r.get_doubles(values.data(), values.size());
        ckpt.tensors.emplace_back(std::move(name), std::move(values));
    }
    if (!r.at_end()) throw std::runtime_error("checkpoint: trailing bytes");
    return ckpt;
}

nlohmann::json Checkpoint::to_json() const {
    nlohmann::json j;
    j["version"] = kVersion;
    j["meta"] = meta;
    j["tensors"] = nlohmann::json::array();
    for (const auto& [name, values] : tensors) j["tensors"].push_back({{"name", name}, {"values", values}});
    return j;
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j) {
    if (j.at("version").get<std::uint32_t>() != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    Checkpoint ckpt;
    ckpt.meta = j.at("meta");
    for (const auto& t : j.at("tensors"))
        ckpt.tensors.emplace_back(t.at("name").get<std::string>(), t.at("values").get<std::vector<double>>());
    return ckpt;
}

void Checkpoint::save(const std::filesystem::path& path) const {
    if (path.extension() == ".json")
        write_file(path, to_json().dump(1) + "\n");
    else
        write_file(path, to_bytes());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    if (path.extension() == ".json") return from_json(nlohmann::json::parse(bytes));
    return from_bytes(bytes);
}

}  // namespace deer::nn
