#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tnfcm/binary_io.hpp"
#include "tnfcm/common.hpp"
#include "tnfcm/model.hpp"

namespace tnfcm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Checkpoint layout (little-endian):
///   "TNFM" | u32 version | u64 metadata length | metadata (UTF-8 JSON)
///   | every tensor listed in metadata["tensors"], in order, as f32
inline void save_checkpoint(const Model& model, const std::filesystem::path& path) {
    nlohmann::ordered_json meta;
    meta["config"] = nlohmann::json(model.config);
    auto encs = nlohmann::ordered_json::array();
    for (const auto& e : model.params.encoders)
        encs.push_back({{"modality", e.modality},
                        {"input_dim", e.input_dim},
                        {"hidden_dim", e.hidden_dim},
                        {"embed_dim", e.embed_dim}});
    meta["encoders"] = encs;
    auto pairs = nlohmann::ordered_json::array();
    for (const auto& p : model.index.pairs()) pairs.push_back({p.first, p.second});
    meta["relation_pairs"] = pairs;
    meta["untied_directions"] = model.index.untied();
    meta["epoch"] = model.epoch;
    meta["history"] = model.history;
    auto tens = nlohmann::ordered_json::array();
    const auto views = tensors(model.params);
    for (const auto& t : views) tens.push_back({{"name", t.name}, {"shape", t.shape}});
    meta["tensors"] = tens;
    const std::string text = meta.dump();

    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open " + tmp.string() + " for writing");
        os.write("TNFM", 4);
        binary::write_uint<std::uint32_t>(os, kCheckpointVersion);
        binary::write_uint<std::uint64_t>(os, text.size());
        os.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (const auto& t : views)
            for (double v : t.values) binary::write_f32(os, static_cast<float>(v));
        if (!os) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline Model load_checkpoint(const std::filesystem::path& path) {
    const std::string name = path.string();
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open checkpoint " + name);
    binary::expect_magic(is, "TNFM", name);
    const auto version = binary::read_uint<std::uint32_t>(is, name + " version");
    if (version != kCheckpointVersion)
        throw FormatError(detail::concat(name, ": unsupported checkpoint version ", version, " (this reader handles ",
                                         kCheckpointVersion, ")"));
    const auto len = binary::read_uint<std::uint64_t>(is, name + " metadata length");
    if (len > (1ULL << 32)) throw FormatError(name + ": implausible metadata length");
    std::string text(static_cast<std::size_t>(len), '\0');
    is.read(text.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::uint64_t>(is.gcount()) != len) throw FormatError(name + ": truncated metadata");

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(name + ": metadata is not valid JSON (" + e.what() + ")");
    }

    Model m;
    try {
        m.config = meta.at("config").get<TrainConfig>();
        std::vector<CategoryPair> pairs;
        for (const auto& p : meta.at("relation_pairs")) pairs.push_back({p.at(0).get<std::string>(), p.at(1).get<std::string>()});
        m.index = RelationIndex(std::move(pairs), meta.at("untied_directions").get<bool>());
        for (const auto& e : meta.at("encoders")) {
            ModalityEncoder enc;
            enc.modality = e.at("modality").get<std::string>();
            enc.input_dim = e.at("input_dim").get<std::size_t>();
            enc.hidden_dim = e.at("hidden_dim").get<std::size_t>();
            enc.embed_dim = e.at("embed_dim").get<std::size_t>();
            const std::size_t proj_in = enc.hidden_dim ? enc.hidden_dim : enc.input_dim;
            if (enc.hidden_dim) {
                enc.hidden_weight = Matrix(enc.hidden_dim, enc.input_dim);
                enc.hidden_bias.assign(enc.hidden_dim, 0.0);
            }
            enc.weight = Matrix(enc.embed_dim, proj_in);
            enc.bias.assign(enc.embed_dim, 0.0);
            m.params.encoders.push_back(std::move(enc));
        }
        m.epoch = meta.at("epoch").get<std::size_t>();
        m.history = meta.at("history");
        const std::size_t dim = m.embedding_dim();
        for (const auto& t : meta.at("tensors")) {
            const std::string tn = t.at("name").get<std::string>();
            const auto shape = t.at("shape").get<std::vector<std::size_t>>();
            if (tn == "relations") m.params.relations = Matrix(shape.at(0), shape.at(1));
            if (tn == "masks") m.params.masks = Matrix(shape.at(0), shape.at(1));
        }
        if (!m.params.relations.empty() &&
            (m.params.relations.cols() != dim || m.params.relations.rows() != m.index.num_rows()))
            throw FormatError(name + ": relation tensor shape disagrees with metadata");
        if (!m.params.masks.empty() && (m.params.masks.cols() != dim || m.params.masks.rows() != m.index.num_pairs()))
            throw FormatError(name + ": mask tensor shape disagrees with metadata");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(name + ": malformed metadata (" + e.what() + ")");
    }

    auto views = tensors(m.params);
    const auto& declared = meta.at("tensors");
    if (declared.size() != views.size()) throw FormatError(name + ": tensor list disagrees with model layout");
    for (std::size_t i = 0; i < views.size(); ++i) {
        if (declared[i].at("name").get<std::string>() != views[i].name ||
            declared[i].at("shape").get<std::vector<std::size_t>>() != views[i].shape)
            throw FormatError(name + ": tensor '" + views[i].name + "' does not match declared layout");
        for (double& v : views[i].values) v = binary::read_f32(is, name + " tensor " + views[i].name);
    }
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError(name + ": trailing bytes after tensors");
    check_finite(m.params);
    return m;
}

}  // namespace tnfcm
