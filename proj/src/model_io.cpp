#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "srs/cvae.hpp"
#include "srs/errors.hpp"

namespace srs::cvae {
namespace {

constexpr char kMagic[8] = {'S', 'R', 'S', 'C', 'V', 'A', 'E', '\0'};

static_assert(std::endian::native == std::endian::little, "model files are little-endian");

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

struct Reader {
    std::string_view bytes;
    std::size_t pos = 0;

    template <typename T>
    T get() {
        if (bytes.size() - pos < sizeof(T)) throw ParseError("model file is truncated or corrupt");
        T v;
        std::memcpy(&v, bytes.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::string_view take(std::size_t n) {
        if (bytes.size() - pos < n) throw ParseError("model file is truncated or corrupt");
        auto s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

std::string serialize_model(const CvaeModel& model) {
    const auto& a = model.architecture();
    const auto& tc = model.train_config;
    nlohmann::ordered_json meta;
    meta["architecture"] = {{"channels", a.channels},          {"length", a.length},
                            {"classes", a.classes},            {"conv_channels", a.conv_channels},
                            {"latent_dim", a.latent_dim},      {"decoder_sigma", a.decoder_sigma}};
    meta["norm"] = {{"min", model.norm().min}, {"max", model.norm().max}};
    meta["train"] = {{"learning_rate", tc.learning_rate}, {"iterations", tc.iterations}, {"batch_size", tc.batch_size},
                     {"seed", tc.seed},                   {"beta1", tc.beta1},           {"beta2", tc.beta2},
                     {"epsilon", tc.epsilon}};
    meta["train_mae"] = model.train_mae;
    meta["target"] = model.target;
    auto tensors = nlohmann::ordered_json::array();
    for (const auto& t : model.tensors()) tensors.push_back({{"name", t.name}, {"shape", t.shape}});
    meta["tensors"] = tensors;
    const std::string meta_text = meta.dump();

    std::string out(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kModelFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(meta_text.size()));
    out += meta_text;
    const auto params = model.parameters();
    put<std::uint64_t>(out, params.size());
    out.append(reinterpret_cast<const char*>(params.data()), params.size() * sizeof(double));
    put<std::uint64_t>(out, fnv1a(out));
    return out;
}

CvaeModel deserialize_model(std::string_view bytes) {
    Reader r{bytes};
    if (r.take(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) throw ParseError("not a model file");
    const auto version = r.get<std::uint32_t>();
    if (version != kModelFormatVersion) {
        throw ParseError("model format version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(kModelFormatVersion) + ")");
    }
    const auto meta_len = r.get<std::uint32_t>();
    const std::string_view meta_text = r.take(meta_len);
    const auto count = r.get<std::uint64_t>();
    if (count > (bytes.size() - r.pos) / sizeof(double)) throw ParseError("model file is truncated or corrupt");
    const std::string_view raw = r.take(count * sizeof(double));
    const std::size_t body_end = r.pos;
    const auto checksum = r.get<std::uint64_t>();
    if (r.pos != bytes.size()) throw ParseError("model file has trailing bytes");
    if (checksum != fnv1a(bytes.substr(0, body_end))) throw ParseError("model file checksum mismatch (corrupt)");

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_text);
        CvaeModel model;
        Architecture a;
        const auto& ja = meta.at("architecture");
        a.channels = ja.at("channels");
        a.length = ja.at("length");
        a.classes = ja.at("classes");
        a.conv_channels = ja.at("conv_channels").get<std::vector<std::size_t>>();
        a.latent_dim = ja.at("latent_dim");
        a.decoder_sigma = ja.at("decoder_sigma");
        model.set_architecture(a);
        NormStats norm;
        norm.min = meta.at("norm").at("min").get<std::vector<double>>();
        norm.max = meta.at("norm").at("max").get<std::vector<double>>();
        model.set_norm(std::move(norm));
        const auto& jt = meta.at("train");
        model.train_config.learning_rate = jt.at("learning_rate");
        model.train_config.iterations = jt.at("iterations");
        model.train_config.batch_size = jt.at("batch_size");
        model.train_config.seed = jt.at("seed");
        model.train_config.beta1 = jt.at("beta1");
        model.train_config.beta2 = jt.at("beta2");
        model.train_config.epsilon = jt.at("epsilon");
        model.train_mae = meta.at("train_mae");
        model.target = meta.at("target");
        if (model.parameters().size() != count) throw ParseError("model parameter count does not match architecture");
        std::memcpy(model.parameters().data(), raw.data(), raw.size());
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model metadata is invalid: ") + e.what());
    }
}

void save_model(const CvaeModel& model, const std::filesystem::path& path) {
    const std::string bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

CvaeModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return deserialize_model(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace srs::cvae
