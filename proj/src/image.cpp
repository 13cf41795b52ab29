#include "msaf/image.hpp"

#include <fstream>

namespace msaf {

namespace {

struct Cursor {
    const std::string& s;
    const std::string& origin;
    size_t off = 0;

    [[noreturn]] void die(const std::string& what) const {
        fail(what + " in " + origin + " at byte " + std::to_string(off));
    }
    bool eof() const { return off >= s.size(); }
    uint8_t byte() const { return (uint8_t)s[off]; }

    static bool is_space(uint8_t c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    }

    // Whitespace and '#' comments separate header tokens.
    void skip_separators() {
        while (!eof()) {
            if (is_space(byte())) {
                ++off;
            } else if (byte() == '#') {
                while (!eof() && byte() != '\n') ++off;
            } else {
                return;
            }
        }
    }

    int64_t next_int(const char* name) {
        skip_separators();
        if (eof() || byte() < '0' || byte() > '9') die(std::string("expected ") + name);
        int64_t v = 0;
        while (!eof() && byte() >= '0' && byte() <= '9') {
            v = v * 10 + (byte() - '0');
            if (v > (1 << 20)) die(std::string(name) + " out of range");
            ++off;
        }
        return v;
    }
};

// Shared header+payload walk; `channels` is 1 for P5, 3 for P6.
std::vector<uint8_t> parse_netpbm(const std::string& bytes, const std::string& origin,
                                  const char* magic, int64_t channels, int64_t& w, int64_t& h) {
    Cursor c{bytes, origin};
    if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1])
        c.die(std::string("wrong magic, expected ") + magic);
    c.off = 2;

    w = c.next_int("width");
    h = c.next_int("height");
    if (w < 1 || h < 1) c.die("non-positive dimensions");
    size_t maxval_at = c.off;
    int64_t maxval = c.next_int("maxval");
    if (maxval != 255) {
        c.off = maxval_at;
        c.skip_separators();
        c.die("maxval " + std::to_string(maxval) + " unsupported, expected 255");
    }
    if (c.eof() || !Cursor::is_space(c.byte())) c.die("expected single whitespace before payload");
    ++c.off;

    size_t need = (size_t)(w * h * channels);
    size_t have = bytes.size() - c.off;
    if (have < need)
        c.die("truncated pixel payload, need " + std::to_string(need) + " bytes, have " +
              std::to_string(have));
    if (have > need) {
        c.off += need;
        c.die("trailing bytes after pixel payload");
    }
    return std::vector<uint8_t>(bytes.begin() + (std::ptrdiff_t)c.off, bytes.end());
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    check(f.good(), "cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    check(f.good(), "cannot open " + path + " for writing");
    f.write(bytes.data(), (std::streamsize)bytes.size());
    f.flush();
    check(f.good(), "write to " + path + " failed");
}

std::string header(const char* magic, int64_t w, int64_t h) {
    return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

}  // namespace

GrayImage parse_pgm(const std::string& bytes, const std::string& origin) {
    GrayImage img;
    img.px = parse_netpbm(bytes, origin, "P5", 1, img.w, img.h);
    return img;
}

RgbImage parse_ppm(const std::string& bytes, const std::string& origin) {
    RgbImage img;
    img.px = parse_netpbm(bytes, origin, "P6", 3, img.w, img.h);
    return img;
}

std::string serialize_pgm(const GrayImage& img) {
    check(img.w >= 1 && img.h >= 1 && (int64_t)img.px.size() == img.w * img.h,
          "graymap dimensions do not match payload");
    std::string out = header("P5", img.w, img.h);
    out.append(img.px.begin(), img.px.end());
    return out;
}

std::string serialize_ppm(const RgbImage& img) {
    check(img.w >= 1 && img.h >= 1 && (int64_t)img.px.size() == img.w * img.h * 3,
          "pixmap dimensions do not match payload");
    std::string out = header("P6", img.w, img.h);
    out.append(img.px.begin(), img.px.end());
    return out;
}

GrayImage read_pgm(const std::string& path) { return parse_pgm(slurp(path), path); }
RgbImage read_ppm(const std::string& path) { return parse_ppm(slurp(path), path); }
void write_pgm(const std::string& path, const GrayImage& img) { spit(path, serialize_pgm(img)); }
void write_ppm(const std::string& path, const RgbImage& img) { spit(path, serialize_ppm(img)); }

std::vector<float> load_fta(const GrayImage& img) {
    std::vector<float> v(img.px.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = (float)img.px[i] / 255.0f;
    return v;
}

std::vector<float> load_semantic(const GrayImage& img) {
    std::vector<float> v(img.px.size());
    for (size_t i = 0; i < v.size(); ++i) {
        check(img.px[i] < kSemanticClasses,
              "semantic id " + std::to_string(img.px[i]) + " out of range");
        v[i] = (float)img.px[i] / (float)(kSemanticClasses - 1);
    }
    return v;
}

std::vector<float> load_rgb_planar(const RgbImage& img) {
    size_t plane = (size_t)(img.w * img.h);
    std::vector<float> v(plane * 3);
    for (size_t p = 0; p < plane; ++p)
        for (size_t ch = 0; ch < 3; ++ch)
            v[ch * plane + p] = (float)img.px[p * 3 + ch] / 255.0f;
    return v;
}

}  // namespace msaf
