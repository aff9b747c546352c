#include "degradelab/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include "degradelab/error.hpp"

namespace degradelab {

namespace {

constexpr char kMagic[] = "DLNET1";
constexpr std::uint32_t kMaxName = 4096;

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) |
        (v >> 24);
  }
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  v = to_le(v);
  out.write(reinterpret_cast<const char*>(&v), 4);
}

void put_floats(std::ostream& out, const AlignedVector<float>& values) {
  for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

struct Reader {
  std::istream& in;
  std::string path;

  std::uint32_t u32() {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 4)) fail("unexpected end of file");
    return to_le(v);
  }
  std::string bytes(std::uint32_t n) {
    std::string s(n, '\0');
    if (n && !in.read(s.data(), n)) fail("unexpected end of file");
    return s;
  }
  AlignedVector<float> floats(std::size_t n) {
    AlignedVector<float> out(n);
    for (auto& f : out) f = std::bit_cast<float>(u32());
    return out;
  }
  [[noreturn]] void fail(const std::string& what) {
    throw_io("checkpoint " + path + ": " + what);
  }
};

struct Record {
  std::vector<int> dims;
  AlignedVector<float> values;
};

void put_record(std::ostream& out, const std::string& name,
                const std::vector<int>& dims, const AlignedVector<float>& values) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) put_u32(out, static_cast<std::uint32_t>(d));
  put_floats(out, values);
}

}  // namespace

std::string meta_from_spec(const NetSpec& spec) {
  std::ostringstream os;
  os << "role=" << role_name(spec.role) << " width=" << spec.width
     << " blocks=" << spec.blocks << " scale=" << spec.scale;
  return os.str();
}

NetSpec spec_from_meta(const std::string& meta) {
  std::map<std::string, std::string> kv;
  std::istringstream is(meta);
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw_io("malformed checkpoint meta: " + meta);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"role", "width", "blocks", "scale"}) {
    if (!kv.count(key)) throw_io(std::string("checkpoint meta lacks ") + key);
  }
  const NetRole role = parse_role(kv["role"]);
  const int width = std::stoi(kv["width"]);
  const int blocks = std::stoi(kv["blocks"]);
  const int scale = std::stoi(kv["scale"]);
  switch (role) {
    case NetRole::Downsampler: return downsampler_spec(width, blocks, scale);
    case NetRole::Discriminator: return discriminator_spec(width);
    case NetRole::SR: return sr_spec(width, blocks, scale);
  }
  throw_io("unknown role in checkpoint meta");
}

void save_checkpoint(const std::filesystem::path& path, const Net<float>& net,
                     const AdamState<float>* adam) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write checkpoint " + path.string());
  out.write(kMagic, 6);
  const std::string meta = meta_from_spec(net.spec());
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));

  const auto params = net.params();
  const bool with_adam = adam && !adam->m.empty();
  if (with_adam && adam->m.size() != params.size()) {
    throw_invalid("adam state does not match the network");
  }
  const std::size_t records = params.size() * (with_adam ? 3 : 1) + (with_adam ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(records));
  for (const auto* p : params) put_record(out, p->name, p->shape, p->value);
  if (with_adam) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      put_record(out, "adam.m/" + params[i]->name, params[i]->shape, adam->m[i]);
      put_record(out, "adam.v/" + params[i]->name, params[i]->shape, adam->v[i]);
    }
    put_record(out, "adam.t", {1}, {static_cast<float>(adam->t)});
  }
  if (!out) throw_io("error writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open checkpoint " + path.string());
  Reader rd{in, path.string()};
  if (rd.bytes(6) != std::string(kMagic, 6)) rd.fail("bad magic, expected DLNET1");
  const std::uint32_t meta_len = rd.u32();
  if (meta_len > kMaxName) rd.fail("meta block too large");
  Net<float> net(spec_from_meta(rd.bytes(meta_len)));

  std::map<std::string, Record> records;
  const std::uint32_t count = rd.u32();
  for (std::uint32_t r = 0; r < count; ++r) {
    const std::uint32_t name_len = rd.u32();
    if (name_len > kMaxName) rd.fail("record name too long");
    std::string name = rd.bytes(name_len);
    const std::uint32_t ndims = rd.u32();
    if (ndims > 8) rd.fail("too many dimensions in " + name);
    Record rec;
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < ndims; ++d) {
      rec.dims.push_back(static_cast<int>(rd.u32()));
      n *= static_cast<std::size_t>(rec.dims.back());
    }
    if (n > (std::size_t{1} << 30)) rd.fail("record " + name + " too large");
    rec.values = rd.floats(n);
    records.emplace(std::move(name), std::move(rec));
  }

  auto take = [&](const std::string& name, const Param<float>& p) -> Record& {
    auto it = records.find(name);
    if (it == records.end()) rd.fail("missing tensor " + name);
    if (it->second.dims != p.shape) rd.fail("shape mismatch for " + name);
    return it->second;
  };
  for (auto* p : net.params()) p->value = take(p->name, *p).values;

  Checkpoint ck{std::move(net), std::nullopt};
  if (records.count("adam.t")) {
    AdamState<float> st;
    for (auto* p : ck.net.params()) {
      st.m.push_back(take("adam.m/" + p->name, *p).values);
      st.v.push_back(take("adam.v/" + p->name, *p).values);
    }
    st.t = static_cast<std::int64_t>(records["adam.t"].values.at(0));
    ck.adam = std::move(st);
  }
  return ck;
}

}  // namespace degradelab
