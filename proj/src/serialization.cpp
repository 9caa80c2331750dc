#include "rcf/serialization.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rcf {

namespace {

constexpr std::array<char, 8> kModelMagic{'R', 'C', 'F', 'M', 'O', 'D', 'E', 'L'};
constexpr std::array<char, 8> kEnsembleMagic{'R', 'C', 'F', 'E', 'N', 'S', 'M', 'B'};
constexpr std::uint64_t kMaxHeader = 1 << 24;

template <typename T>
T to_little(T value) {
    if constexpr (std::endian::native == std::endian::little) {
        return value;
    } else {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
}

template <typename T>
void put(std::ostream& out, T value) {
    value = to_little(value);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw std::runtime_error("model file is truncated");
    return to_little(value);
}

void put_doubles(std::ostream& out, const double* data, Index count) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    } else {
        for (Index i = 0; i < count; ++i) put(out, data[i]);
    }
}

void get_doubles(std::istream& in, double* data, Index count) {
    if constexpr (std::endian::native == std::endian::little) {
        if (!in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double))))
            throw std::runtime_error("model file is truncated");
    } else {
        for (Index i = 0; i < count; ++i) data[i] = get<double>(in);
    }
}

void put_header(std::ostream& out, const std::array<char, 8>& magic, const nlohmann::ordered_json& header) {
    out.write(magic.data(), magic.size());
    put(out, kModelFormatVersion);
    const std::string text = header.dump();
    put(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

nlohmann::json get_header(std::istream& in, const std::array<char, 8>& magic, const char* what) {
    std::array<char, 8> found{};
    if (!in.read(found.data(), found.size()) || found != magic)
        throw std::runtime_error(std::string("not an rcf ") + what + " file (bad magic)");
    const auto version = get<std::uint32_t>(in);
    if (version != kModelFormatVersion)
        throw std::runtime_error("unsupported " + std::string(what) + " format version " + std::to_string(version));
    const auto size = get<std::uint64_t>(in);
    if (size > kMaxHeader) throw std::runtime_error("model header is implausibly large");
    std::string text(size, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(size))) throw std::runtime_error("model file is truncated");
    return nlohmann::json::parse(text);
}

template <typename T>
T required(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw std::runtime_error(std::string("model header lacks '") + key + "'");
    return j.at(key).get<T>();
}

} // namespace

nlohmann::ordered_json to_json(const MacroParams& p) {
    nlohmann::ordered_json j;
    j["spectral_radius"] = p.spectral_radius;
    j["density"] = p.density;
    j["size"] = p.size;
    j["leak"] = p.leak;
    j["input_strength"] = p.input_strength;
    if (!p.input_unit_class.empty() || !p.class_input_strength.empty()) {
        j["input_unit_class"] = p.input_unit_class;
        j["class_input_strength"] = p.class_input_strength;
    }
    j["input_bias"] = p.input_bias;
    j["tikhonov"] = p.tikhonov;
    j["readout"] = std::string(to_string(p.readout));
    j["seed"] = p.seed;
    return j;
}

MacroParams macro_params_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where, "expected an object");
    MacroParams p;
    for (const auto& [key, value] : j.items()) {
        const std::string field = where + "." + key;
        try {
            if (key == "spectral_radius") p.spectral_radius = value.get<double>();
            else if (key == "density") p.density = value.get<double>();
            else if (key == "size") p.size = value.get<Index>();
            else if (key == "leak") p.leak = value.get<double>();
            else if (key == "input_strength") p.input_strength = value.get<double>();
            else if (key == "input_unit_class") p.input_unit_class = value.get<std::vector<int>>();
            else if (key == "class_input_strength") p.class_input_strength = value.get<std::vector<double>>();
            else if (key == "input_bias") p.input_bias = value.get<double>();
            else if (key == "tikhonov") p.tikhonov = value.get<double>();
            else if (key == "readout") p.readout = parse_readout(value.get<std::string>());
            else if (key == "seed") p.seed = value.get<std::uint64_t>();
            else throw ConfigError(field, "unknown key");
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(field, e.what());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(field, e.what());
        }
    }
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where, e.what());
    }
    return p;
}

void write_reservoir(std::ostream& out, const Reservoir& res) {
    const SparseMatrix& a = res.adjacency();
    nlohmann::ordered_json header;
    header["format"] = "rcf-reservoir";
    header["spec_version"] = kSpecVersion;
    header["params"] = to_json(res.params());
    header["size"] = res.size();
    header["input_dim"] = res.input_dim();
    header["output_dim"] = res.output_dim();
    header["feature_dim"] = res.feature_dim();
    header["nnz"] = a.nonZeros();
    header["trained"] = res.trained();
    header["construction_order"] = "adjacency pattern, adjacency values, W_in row-major";
    header["layout"] = "row_ptr,col_idx,values,W_in,W_out,state,last_input";
    put_header(out, kModelMagic, header);

    for (Index i = 0; i <= a.outerSize(); ++i) put(out, static_cast<std::int64_t>(a.outerIndexPtr()[i]));
    for (Index k = 0; k < a.nonZeros(); ++k) put(out, static_cast<std::int64_t>(a.innerIndexPtr()[k]));
    put_doubles(out, a.valuePtr(), a.nonZeros());

    const RowMatrix w_in = res.input_map();
    put_doubles(out, w_in.data(), w_in.size());
    if (res.trained()) {
        const RowMatrix w_out = res.readout_map();
        put_doubles(out, w_out.data(), w_out.size());
    }
    put_doubles(out, res.state().data(), res.state().size());
    put_doubles(out, res.last_input().data(), res.last_input().size());
    if (!out) throw std::runtime_error("failed to write model");
}

Reservoir read_reservoir(std::istream& in) {
    const auto header = get_header(in, kModelMagic, "model");
    const MacroParams params = macro_params_from_json(required<nlohmann::json>(header, "params"));
    const auto n = required<Index>(header, "size");
    const auto input_dim = required<Index>(header, "input_dim");
    const auto output_dim = required<Index>(header, "output_dim");
    const auto nnz = required<Index>(header, "nnz");
    const bool trained = required<bool>(header, "trained");
    if (n != params.size || input_dim < 1 || output_dim < 1 || nnz < 0 || nnz > n * n)
        throw std::runtime_error("model header has inconsistent dimensions");

    std::vector<std::int64_t> row_ptr(static_cast<std::size_t>(n + 1));
    for (auto& v : row_ptr) v = get<std::int64_t>(in);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(nnz));
    std::vector<std::int64_t> cols(static_cast<std::size_t>(nnz));
    for (auto& c : cols) c = get<std::int64_t>(in);
    std::vector<double> values(static_cast<std::size_t>(nnz));
    get_doubles(in, values.data(), nnz);
    if (row_ptr.front() != 0 || row_ptr.back() != nnz) throw std::runtime_error("model adjacency is corrupt");
    for (Index i = 0; i < n; ++i) {
        const auto lo = row_ptr[static_cast<std::size_t>(i)];
        const auto hi = row_ptr[static_cast<std::size_t>(i + 1)];
        if (lo > hi) throw std::runtime_error("model adjacency is corrupt");
        for (auto k = lo; k < hi; ++k) {
            const auto c = cols[static_cast<std::size_t>(k)];
            if (c < 0 || c >= n) throw std::runtime_error("model adjacency is corrupt");
            triplets.emplace_back(i, static_cast<Index>(c), values[static_cast<std::size_t>(k)]);
        }
    }
    SparseMatrix a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());

    RowMatrix w_in(n, input_dim);
    get_doubles(in, w_in.data(), w_in.size());
    Reservoir res = Reservoir::from_matrices(params, std::move(a), Matrix(w_in), output_dim, false);
    if (trained) {
        RowMatrix w_out(output_dim, res.feature_dim());
        get_doubles(in, w_out.data(), w_out.size());
        res.set_readout_map(Matrix(w_out));
    }
    Vector state(n);
    get_doubles(in, state.data(), n);
    Vector last_input(input_dim);
    get_doubles(in, last_input.data(), input_dim);
    res.set_state(std::move(state), std::move(last_input));
    return res;
}

void save_reservoir(const std::filesystem::path& path, const Reservoir& res) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_reservoir(out, res);
}

Reservoir load_reservoir(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_reservoir(in);
}

void save_ensemble(const std::filesystem::path& path, const LocalizedEnsemble& ensemble) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const auto& layout = ensemble.layout;
    nlohmann::ordered_json header;
    header["format"] = "rcf-ensemble";
    header["spec_version"] = kSpecVersion;
    header["system_dim"] = layout.system_dim;
    header["group_output"] = layout.group_output;
    header["halo"] = layout.halo;
    header["members"] = ensemble.members.size();
    put_header(out, kEnsembleMagic, header);
    put_doubles(out, ensemble.climatology_std.data(), ensemble.climatology_std.size());
    for (const auto& m : ensemble.members) {
        std::ostringstream blob;
        write_reservoir(blob, m);
        const std::string bytes = blob.str();
        put(out, static_cast<std::uint64_t>(bytes.size()));
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw std::runtime_error("failed to write " + path.string());
}

LocalizedEnsemble load_ensemble(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const auto header = get_header(in, kEnsembleMagic, "ensemble");
    LocalizedEnsemble ensemble;
    ensemble.layout = make_layout(required<Index>(header, "system_dim"), required<Index>(header, "group_output"),
                                  required<Index>(header, "halo"));
    const auto members = required<std::size_t>(header, "members");
    if (members != static_cast<std::size_t>(ensemble.layout.num_groups()))
        throw std::runtime_error("ensemble member count does not match its layout");
    ensemble.climatology_std.resize(ensemble.layout.system_dim);
    get_doubles(in, ensemble.climatology_std.data(), ensemble.layout.system_dim);
    for (std::size_t g = 0; g < members; ++g) {
        const auto bytes = get<std::uint64_t>(in);
        std::string blob(bytes, '\0');
        if (!in.read(blob.data(), static_cast<std::streamsize>(bytes))) throw std::runtime_error("ensemble file is truncated");
        std::istringstream member(blob);
        ensemble.members.push_back(read_reservoir(member));
    }
    return ensemble;
}

bool is_ensemble_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::array<char, 8> found{};
    return in.read(found.data(), found.size()) && found == kEnsembleMagic;
}

} // namespace rcf
