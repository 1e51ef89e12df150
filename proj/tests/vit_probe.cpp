// Test-only probe: loads a GSW weight file and an image, runs the encoder
// captures and one decoder point, and dumps everything as JSON so an
// independent reference implementation can compare numerics.

#include <json.hpp>

#include <cstdio>
#include <string>

#include "gescd/png_io.hpp"
#include "vit/sam_decoder.hpp"
#include "vit/sam_encoder.hpp"
#include "vit/sam_weights.hpp"

using namespace gescd;

namespace {

nlohmann::json dump_tensor(const vit::Tensor& t) {
    nlohmann::json j;
    j["shape"] = t.shape;
    j["data"] = t.data;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 7) {
        std::fprintf(stderr,
                     "usage: vit_probe <weights.gsw> <image.png> <facet_layer> <emb_layer> "
                     "<point_x> <point_y>\n");
        return 2;
    }
    try {
        const vit::SamWeights weights = vit::SamWeights::load(argv[1]);
        const Image image = read_image(argv[2]);
        const int facet_layer = std::stoi(argv[3]);
        const int emb_layer = std::stoi(argv[4]);
        const double px = std::stod(argv[5]);
        const double py = std::stod(argv[6]);

        vit::SamEncoder encoder(weights);
        vit::EncoderRequest req;
        req.facet_layer = facet_layer;
        req.facet_select = 1;  // key
        req.embedding_layer = emb_layer;
        req.need_neck = true;
        const vit::EncoderResult enc = encoder.forward(encoder.preprocess(image), req);

        vit::SamDecoder decoder(weights);
        const vit::DecodedMasks dec = decoder.decode_point(enc.neck, px, py);

        nlohmann::json out;
        out["facets"] = dump_tensor(enc.facets);
        out["embedding"] = dump_tensor(enc.embedding);
        out["neck"] = dump_tensor(enc.neck);
        out["iou_predictions"] = dec.iou_predictions;
        nlohmann::json masks = nlohmann::json::array();
        for (const vit::Tensor& m : dec.mask_logits) masks.push_back(dump_tensor(m));
        out["mask_logits"] = std::move(masks);
        std::puts(out.dump().c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "probe failed: %s\n", e.what());
        return 1;
    }
}
