#include "sampleimp/checkpoint.hpp"

#include <cstring>
#include <stdexcept>

#include <json.hpp>

#include "sampleimp/text.hpp"

namespace sampleimp {

namespace {

constexpr char kMagic[8] = {'S', 'I', 'M', 'P', 'C', 'K', 'P', 'T'};

}  // namespace

std::string config_hash(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const ModelState& model,
                     const std::string& hash) {
    const auto& t = model.topology;
    nlohmann::json header = {
        {"format", "sampleimp-checkpoint"},
        {"topology",
         {{"kind", to_string(t.kind)},
          {"timesteps", t.timesteps},
          {"input_width", t.input_width},
          {"hidden", t.hidden},
          {"output", t.output}}},
        {"init_seed", model.init_seed},
        {"config_hash", hash},
        {"param_count", model.params.size()},
    };
    const std::string h = header.dump();
    std::string out(kMagic, sizeof kMagic);
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t len = h.size();
    out.append(reinterpret_cast<const char*>(&version), sizeof version);
    out.append(reinterpret_cast<const char*>(&len), sizeof len);
    out += h;
    out.append(reinterpret_cast<const char*>(model.params.data()), model.params.size() * sizeof(double));
    write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string in = read_file(path);
    const std::size_t fixed = sizeof kMagic + sizeof(std::uint32_t) + sizeof(std::uint64_t);
    if (in.size() < fixed || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0) {
        throw std::runtime_error(path.string() + " is not a checkpoint");
    }
    std::uint32_t version = 0;
    std::uint64_t len = 0;
    std::memcpy(&version, in.data() + sizeof kMagic, sizeof version);
    std::memcpy(&len, in.data() + sizeof kMagic + sizeof version, sizeof len);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    }
    if (in.size() < fixed + len) throw std::runtime_error("truncated checkpoint header");
    const auto header = nlohmann::json::parse(in.substr(fixed, len));

    Checkpoint ck;
    auto& t = ck.model.topology;
    const auto& jt = header.at("topology");
    t.kind = model_kind_from_string(jt.at("kind").get<std::string>());
    t.timesteps = jt.at("timesteps").get<std::size_t>();
    t.input_width = jt.at("input_width").get<std::size_t>();
    t.hidden = jt.at("hidden").get<std::size_t>();
    t.output = jt.at("output").get<std::size_t>();
    ck.model.init_seed = header.at("init_seed").get<std::uint64_t>();
    ck.config_hash = header.at("config_hash").get<std::string>();

    const auto count = header.at("param_count").get<std::size_t>();
    if (count != parameter_count(t)) throw std::runtime_error("checkpoint parameter count does not match topology");
    if (in.size() != fixed + len + count * sizeof(double)) throw std::runtime_error("checkpoint payload size mismatch");
    ck.model.params.resize(count);
    std::memcpy(ck.model.params.data(), in.data() + fixed + len, count * sizeof(double));
    return ck;
}

}  // namespace sampleimp
