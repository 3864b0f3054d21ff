#include "gonlab/image.hpp"

#include <opencv2/imgcodecs.hpp>

#include <fstream>

namespace gonlab {

namespace {

bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

RgbImage read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open image: " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || w < 1 || h < 1 || maxval != 255)
        throw ValidationError("unsupported PPM header in " + path);
    in.get();  // single whitespace after maxval
    RgbImage img(w, h);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (!in) throw ValidationError("truncated PPM data in " + path);
    return img;
}

void write_ppm(const std::string& path, const RgbImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write image: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
}

}  // namespace

RgbImage read_image(const std::string& path) {
    if (has_suffix(path, ".ppm")) return read_ppm(path);
    cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
    if (m.empty()) throw ValidationError("cannot decode image: " + path);
    RgbImage img(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y) {
        const cv::Vec3b* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < m.cols; ++x) {
            img.at(x, y, 0) = row[x][2];  // BGR -> RGB
            img.at(x, y, 1) = row[x][1];
            img.at(x, y, 2) = row[x][0];
        }
    }
    return img;
}

void write_image(const std::string& path, const RgbImage& img) {
    if (has_suffix(path, ".ppm")) {
        write_ppm(path, img);
        return;
    }
    cv::Mat m(img.height, img.width, CV_8UC3);
    for (int y = 0; y < img.height; ++y) {
        cv::Vec3b* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.width; ++x) {
            row[x][2] = img.at(x, y, 0);
            row[x][1] = img.at(x, y, 1);
            row[x][0] = img.at(x, y, 2);
        }
    }
    if (!cv::imwrite(path, m)) throw ValidationError("cannot write image: " + path);
}

SegmentationMask read_mask(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw ValidationError("cannot decode mask: " + path);
    SegmentationMask mask(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y) {
        const uint8_t* row = m.ptr<uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) {
            if (row[x] > 2)
                throw ValidationError("mask value " + std::to_string(row[x]) +
                                      " out of {0,1,2} in " + path);
            mask.at(x, y) = row[x];
        }
    }
    return mask;
}

void write_mask(const std::string& path, const SegmentationMask& mask) {
    cv::Mat m(mask.height, mask.width, CV_8UC1);
    for (int y = 0; y < mask.height; ++y) {
        uint8_t* row = m.ptr<uint8_t>(y);
        for (int x = 0; x < mask.width; ++x) row[x] = mask.at(x, y);
    }
    if (!cv::imwrite(path, m)) throw ValidationError("cannot write mask: " + path);
}

}  // namespace gonlab
