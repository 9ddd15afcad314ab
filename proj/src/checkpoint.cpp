#include "jmlh/checkpoint.hpp"

#include "jmlh/binary_io.hpp"

namespace jmlh {

bool Checkpoint::operator==(const Checkpoint& other) const {
    return model == other.model && standardizer.mean.size() == other.standardizer.mean.size() &&
           standardizer.mean == other.standardizer.mean && standardizer.scale == other.standardizer.scale;
}

namespace {

constexpr std::uint64_t kMaxDim = std::uint64_t(1) << 32;

template <typename Dense>
void put_values(io::ByteWriter& w, const Dense& d) {
    for (Index i = 0; i < d.size(); ++i) w.f64(d.data()[i]);
}

template <typename Dense>
void get_values(io::ByteReader& r, Dense& d) {
    for (Index i = 0; i < d.size(); ++i) d.data()[i] = r.f64("parameter");
}

void put_shape(io::ByteWriter& w, const Layer& layer) {
    w.u64(static_cast<std::uint64_t>(layer.in()));
    w.u64(static_cast<std::uint64_t>(layer.out()));
}

Layer get_shape(io::ByteReader& r) {
    const std::uint64_t in = r.u64("layer input width");
    const std::uint64_t out = r.u64("layer output width");
    if (in == 0 || out == 0 || in > kMaxDim || out > kMaxDim) r.fail("implausible layer shape");
    return Layer(static_cast<Index>(in), static_cast<Index>(out));
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ck) {
    const JmlhModel& model = ck.model;
    io::ByteWriter w;
    w.magic("JMLH1");
    w.u64(static_cast<std::uint64_t>(model.code_length()));
    w.u8(static_cast<std::uint8_t>(model.label_mode));
    w.u8(static_cast<std::uint8_t>(model.variant));
    w.u8(static_cast<std::uint8_t>(model.estimator));
    w.u32(static_cast<std::uint32_t>(model.encoder.size()));
    for (const auto& layer : model.encoder) put_shape(w, layer);
    put_shape(w, model.head);
    w.u64(static_cast<std::uint64_t>(ck.standardizer.mean.size()));

    const std::size_t payload_start = w.size();
    for (const auto& layer : model.encoder) {
        put_values(w, layer.weight);
        put_values(w, layer.bias);
    }
    put_values(w, model.head.weight);
    put_values(w, model.head.bias);
    put_values(w, ck.standardizer.mean);
    put_values(w, ck.standardizer.scale);
    const auto& bytes = w.bytes();
    w.u64(io::fnv1a64(bytes.data() + payload_start, bytes.size() - payload_start));
    return w.bytes();
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& context) {
    io::ByteReader r(bytes, context);
    r.expect_magic("JMLH1");
    const std::uint64_t m = r.u64("code length");
    const std::uint8_t mode = r.u8("label mode");
    const std::uint8_t variant = r.u8("variant");
    const std::uint8_t estimator = r.u8("estimator");
    if (mode > 1) r.fail("unknown label mode");
    if (variant > static_cast<std::uint8_t>(Variant::VAE)) r.fail("unknown variant");
    if (estimator > 1) r.fail("unknown estimator");
    const std::uint32_t depth = r.u32("encoder depth");
    if (depth == 0 || depth > 64) r.fail("implausible encoder depth");

    Checkpoint ck;
    JmlhModel& model = ck.model;
    model.label_mode = static_cast<LabelMode>(mode);
    model.variant = static_cast<Variant>(variant);
    model.estimator = estimator == 0 ? EstimatorKind::DistributionalDerivative : EstimatorKind::StraightThrough;
    for (std::uint32_t l = 0; l < depth; ++l) model.encoder.push_back(get_shape(r));
    model.head = get_shape(r);
    const std::uint64_t std_width = r.u64("standardizer width");
    if (std_width > kMaxDim) r.fail("implausible standardizer width");

    for (std::size_t l = 1; l < model.encoder.size(); ++l) {
        if (model.encoder[l].in() != model.encoder[l - 1].out()) r.fail("encoder layer shapes do not chain");
    }
    if (static_cast<std::uint64_t>(model.code_length()) != m) r.fail("encoder output width != code length");
    if (model.head.in() != model.code_length()) r.fail("head input width != code length");
    if (std_width != 0 && std_width != static_cast<std::uint64_t>(model.input_dim())) {
        r.fail("standardizer width != input width");
    }

    std::uint64_t values = 0;
    for (const auto& layer : model.encoder) values += static_cast<std::uint64_t>(layer.weight.size() + layer.bias.size());
    values += static_cast<std::uint64_t>(model.head.weight.size() + model.head.bias.size()) + 2 * std_width;
    r.need_items(values + 1, 8, "parameter payload");

    const std::size_t payload_start = r.offset();
    for (auto& layer : model.encoder) {
        get_values(r, layer.weight);
        get_values(r, layer.bias);
    }
    get_values(r, model.head.weight);
    get_values(r, model.head.bias);
    if (std_width > 0) {
        ck.standardizer.mean.resize(static_cast<Index>(std_width));
        ck.standardizer.scale.resize(static_cast<Index>(std_width));
        get_values(r, ck.standardizer.mean);
        get_values(r, ck.standardizer.scale);
    }
    const std::size_t payload_end = r.offset();
    const std::uint64_t expected = io::fnv1a64(bytes.data() + payload_start, payload_end - payload_start);
    if (r.u64("checksum") != expected) throw FormatError(context + ": payload checksum mismatch", payload_end);
    r.expect_end();
    return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    io::write_file(path, serialize_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return deserialize_checkpoint(io::read_file(path), path.string());
}

}  // namespace jmlh
