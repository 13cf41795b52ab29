#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "msaf/layers.hpp"

// Container layout (all integers little-endian u32):
//   "MSAF" | version | entry count
//   entry: name length | name bytes | dtype code (0 = f32) | rank | extents | raw values
static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace msaf {

namespace {

constexpr char kMagic[4] = {'M', 'S', 'A', 'F'};

void put_u32(std::ofstream& f, uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }

struct Reader {
    std::ifstream f;
    uint64_t off = 0;
    std::string path;

    void pull(void* dst, uint64_t n) {
        f.read(reinterpret_cast<char*>(dst), (std::streamsize)n);
        if ((uint64_t)f.gcount() != n)
            fail("checkpoint " + path + " truncated at byte " + std::to_string(off));
        off += n;
    }
    uint32_t u32() {
        uint32_t v = 0;
        pull(&v, 4);
        return v;
    }
    bool at_end() { return f.peek() == std::ifstream::traits_type::eof(); }
};

}  // namespace

void checkpoint_save(const std::string& path,
                     const std::vector<std::pair<std::string, TensorF>>& entries) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    check(f.good(), "cannot open " + path + " for writing");

    f.write(kMagic, 4);
    put_u32(f, kCheckpointVersion);
    put_u32(f, (uint32_t)entries.size());
    for (const auto& [name, t] : entries) {
        check(t.defined(), "checkpoint entry " + name + " is undefined");
        put_u32(f, (uint32_t)name.size());
        f.write(name.data(), (std::streamsize)name.size());
        put_u32(f, 0);  // dtype: f32
        put_u32(f, (uint32_t)t.rank());
        for (int64_t d : t.shape()) put_u32(f, (uint32_t)d);
        f.write(reinterpret_cast<const char*>(t.values().data()),
                (std::streamsize)(t.numel() * sizeof(float)));
    }
    f.flush();
    check(f.good(), "write to " + path + " failed");
}

std::vector<std::pair<std::string, TensorF>> checkpoint_load(const std::string& path) {
    Reader r{std::ifstream(path, std::ios::binary), 0, path};
    check(r.f.good(), "cannot open " + path);

    char magic[4];
    r.pull(magic, 4);
    check(std::memcmp(magic, kMagic, 4) == 0, "bad checkpoint magic in " + path);
    uint32_t version = r.u32();
    check(version == kCheckpointVersion, "unsupported checkpoint version " +
                                             std::to_string(version) + " in " + path);
    uint32_t count = r.u32();

    std::vector<std::pair<std::string, TensorF>> entries;
    entries.reserve(count);
    for (uint32_t e = 0; e < count; ++e) {
        uint32_t name_len = r.u32();
        check(name_len <= 4096, "entry name of " + std::to_string(name_len) + " bytes in " + path);
        std::string name(name_len, '\0');
        r.pull(name.data(), name_len);

        uint32_t dtype = r.u32();
        check(dtype == 0, "unsupported dtype code " + std::to_string(dtype) + " for " + name);
        uint32_t rank = r.u32();
        check(rank <= 8, "entry " + name + " has rank " + std::to_string(rank));
        Shape shape(rank);
        uint64_t numel = 1;
        for (uint32_t i = 0; i < rank; ++i) {
            shape[i] = (int64_t)r.u32();
            numel *= (uint64_t)shape[i];
            check(numel <= (1ull << 31), "entry " + name + " is implausibly large");
        }
        TensorF t = TensorF::zeros(shape);
        r.pull(t.values().data(), numel * sizeof(float));
        entries.emplace_back(std::move(name), std::move(t));
    }
    check(r.at_end(), "trailing bytes after the last entry in " + path);
    return entries;
}

}  // namespace msaf
