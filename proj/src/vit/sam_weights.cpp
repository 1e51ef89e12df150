#include "vit/sam_weights.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>

namespace gescd::vit {

namespace {

constexpr char kMagic[4] = {'G', 'S', 'W', '1'};

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& msg, const std::string& path) {
    throw Error(ErrorCode::BackendUnavailable, "vith-adapter: " + msg + ": " + path);
}

template <typename T>
T read_pod(std::FILE* f, const std::string& path) {
    T v{};
    if (std::fread(&v, sizeof(T), 1, f) != 1) fail("truncated weight file", path);
    return v;
}

template <typename T>
void write_pod(std::FILE* f, const T& v) {
    std::fwrite(&v, sizeof(T), 1, f);
}

SamMeta parse_meta(const std::string& json_text, const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("bad metadata block (") + e.what() + ")", path);
    }
    SamMeta m;
    try {
        m.img_size = j.at("img_size").get<int>();
        m.patch_size = j.at("patch_size").get<int>();
        m.embed_dim = j.at("embed_dim").get<int>();
        m.depth = j.at("depth").get<int>();
        m.num_heads = j.at("num_heads").get<int>();
        m.mlp_ratio = j.at("mlp_ratio").get<double>();
        m.window_size = j.at("window_size").get<int>();
        m.global_blocks = j.at("global_blocks").get<std::vector<int>>();
        m.neck_dim = j.at("neck_dim").get<int>();
        if (j.contains("pixel_mean"))
            for (int c = 0; c < 3; ++c) m.pixel_mean[c] = j["pixel_mean"][c].get<double>();
        if (j.contains("pixel_std"))
            for (int c = 0; c < 3; ++c) m.pixel_std[c] = j["pixel_std"][c].get<double>();
        const auto& d = j.at("decoder");
        m.transformer_dim = d.at("transformer_dim").get<int>();
        m.decoder_heads = d.at("heads").get<int>();
        m.decoder_downsample = d.at("downsample").get<int>();
        m.decoder_mlp_dim = d.at("mlp_dim").get<int>();
        m.num_mask_tokens = d.at("num_mask_tokens").get<int>();
        m.iou_head_hidden = d.at("iou_head_hidden").get<int>();
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("metadata field missing (") + e.what() + ")", path);
    }
    if (m.img_size <= 0 || m.patch_size <= 0 || m.img_size % m.patch_size != 0)
        fail("img_size must be a positive multiple of patch_size", path);
    if (m.embed_dim <= 0 || m.num_heads <= 0 || m.embed_dim % m.num_heads != 0)
        fail("embed_dim must be divisible by num_heads", path);
    if (m.depth <= 0) fail("depth must be positive", path);
    return m;
}

nlohmann::json meta_to_json(const SamMeta& m) {
    nlohmann::json j;
    j["img_size"] = m.img_size;
    j["patch_size"] = m.patch_size;
    j["embed_dim"] = m.embed_dim;
    j["depth"] = m.depth;
    j["num_heads"] = m.num_heads;
    j["mlp_ratio"] = m.mlp_ratio;
    j["window_size"] = m.window_size;
    j["global_blocks"] = m.global_blocks;
    j["neck_dim"] = m.neck_dim;
    j["pixel_mean"] = m.pixel_mean;
    j["pixel_std"] = m.pixel_std;
    j["decoder"] = {{"transformer_dim", m.transformer_dim}, {"heads", m.decoder_heads},
                    {"downsample", m.decoder_downsample},   {"mlp_dim", m.decoder_mlp_dim},
                    {"num_mask_tokens", m.num_mask_tokens}, {"iou_head_hidden", m.iou_head_hidden}};
    return j;
}

}  // namespace

const Tensor& SamWeights::tensor(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end())
        throw Error(ErrorCode::BackendUnavailable, "vith-adapter weights: missing tensor " + name);
    return it->second;
}

SamWeights SamWeights::load(const std::string& path) {
    if (path.empty())
        throw Error(ErrorCode::BackendUnavailable,
                    "vith-adapter requires weights_path (no weights configured)");
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::BackendUnavailable, "vith-adapter weights not found: " + path);

    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) fail("cannot open weight file", path);

    char magic[4];
    if (std::fread(magic, 1, 4, f.get()) != 4 || std::memcmp(magic, kMagic, 4) != 0)
        fail("not a GSW1 weight file", path);

    const auto meta_len = read_pod<std::uint32_t>(f.get(), path);
    std::string meta_text(meta_len, '\0');
    if (meta_len > 0 && std::fread(meta_text.data(), 1, meta_len, f.get()) != meta_len)
        fail("truncated weight file", path);

    SamWeights w;
    w.meta = parse_meta(meta_text, path);

    const auto count = read_pod<std::uint32_t>(f.get(), path);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint16_t>(f.get(), path);
        std::string name(name_len, '\0');
        if (std::fread(name.data(), 1, name_len, f.get()) != name_len)
            fail("truncated weight file", path);
        const auto ndim = read_pod<std::uint8_t>(f.get(), path);
        std::vector<int> shape(ndim);
        std::int64_t numel = 1;
        for (int d = 0; d < ndim; ++d) {
            shape[d] = static_cast<int>(read_pod<std::uint32_t>(f.get(), path));
            numel *= shape[d];
        }
        if (numel < 0 || numel > (1ll << 33)) fail("implausible tensor size for " + name, path);
        Tensor t;
        t.shape = std::move(shape);
        t.data.resize(static_cast<std::size_t>(numel));
        if (numel > 0 &&
            std::fread(t.data.data(), sizeof(float), t.data.size(), f.get()) != t.data.size())
            fail("truncated weight file", path);
        w.tensors_[name] = std::move(t);
    }
    return w;
}

void SamWeights::save(const std::string& path) const {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error(ErrorCode::Io, "cannot write weight file: " + path);

    std::fwrite(kMagic, 1, 4, f.get());
    const std::string meta_text = meta_to_json(meta).dump();
    write_pod(f.get(), static_cast<std::uint32_t>(meta_text.size()));
    std::fwrite(meta_text.data(), 1, meta_text.size(), f.get());
    write_pod(f.get(), static_cast<std::uint32_t>(tensors_.size()));
    for (const auto& [name, t] : tensors_) {
        write_pod(f.get(), static_cast<std::uint16_t>(name.size()));
        std::fwrite(name.data(), 1, name.size(), f.get());
        write_pod(f.get(), static_cast<std::uint8_t>(t.shape.size()));
        for (int d : t.shape) write_pod(f.get(), static_cast<std::uint32_t>(d));
        std::fwrite(t.data.data(), sizeof(float), t.data.size(), f.get());
    }
}

}  // namespace gescd::vit
