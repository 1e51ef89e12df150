#!/usr/bin/env python3
"""Convert a segment-anything ViT checkpoint into the GSW1 weight file the
vith-adapter backend loads.

Usage:
    python3 tools/export_sam_weights.py sam_vit_h_4b8939.pth vith.gsw [--model vit_h]

The output is a self-describing container (JSON metadata block + named
float32 tensors), so smaller ViT variants work with the same reader.
"""

import argparse
import json
import struct
import sys

ARCH = {
    "vit_h": dict(embed_dim=1280, depth=32, num_heads=16, global_blocks=[7, 15, 23, 31]),
    "vit_l": dict(embed_dim=1024, depth=24, num_heads=16, global_blocks=[5, 11, 17, 23]),
    "vit_b": dict(embed_dim=768, depth=12, num_heads=12, global_blocks=[2, 5, 8, 11]),
}


def build_meta(model: str) -> dict:
    arch = ARCH[model]
    return {
        "img_size": 1024,
        "patch_size": 16,
        "embed_dim": arch["embed_dim"],
        "depth": arch["depth"],
        "num_heads": arch["num_heads"],
        "mlp_ratio": 4.0,
        "window_size": 14,
        "global_blocks": arch["global_blocks"],
        "neck_dim": 256,
        "pixel_mean": [123.675, 116.28, 103.53],
        "pixel_std": [58.395, 57.12, 57.375],
        "decoder": {
            "transformer_dim": 256,
            "heads": 8,
            "downsample": 2,
            "mlp_dim": 2048,
            "num_mask_tokens": 4,
            "iou_head_hidden": 256,
        },
    }


def tensor_map(meta: dict) -> dict:
    """GSW tensor name -> checkpoint state_dict key."""
    out = {
        "enc.patch_embed.w": "image_encoder.patch_embed.proj.weight",
        "enc.patch_embed.b": "image_encoder.patch_embed.proj.bias",
        "enc.pos_embed": "image_encoder.pos_embed",
        "neck.conv1.w": "image_encoder.neck.0.weight",
        "neck.ln1.w": "image_encoder.neck.1.weight",
        "neck.ln1.b": "image_encoder.neck.1.bias",
        "neck.conv2.w": "image_encoder.neck.2.weight",
        "neck.ln2.w": "image_encoder.neck.3.weight",
        "neck.ln2.b": "image_encoder.neck.3.bias",
        "prompt.pe_gauss": "prompt_encoder.pe_layer.positional_encoding_gaussian_matrix",
        "prompt.point_embed.1": "prompt_encoder.point_embeddings.1.weight",
        "prompt.not_a_point": "prompt_encoder.not_a_point_embed.weight",
        "prompt.no_mask": "prompt_encoder.no_mask_embed.weight",
        "dec.iou_token": "mask_decoder.iou_token.weight",
        "dec.mask_tokens": "mask_decoder.mask_tokens.weight",
        "dec.norm_final.w": "mask_decoder.transformer.norm_final_attn.weight",
        "dec.norm_final.b": "mask_decoder.transformer.norm_final_attn.bias",
        "dec.upscale.conv1.w": "mask_decoder.output_upscaling.0.weight",
        "dec.upscale.conv1.b": "mask_decoder.output_upscaling.0.bias",
        "dec.upscale.ln.w": "mask_decoder.output_upscaling.1.weight",
        "dec.upscale.ln.b": "mask_decoder.output_upscaling.1.bias",
        "dec.upscale.conv2.w": "mask_decoder.output_upscaling.3.weight",
        "dec.upscale.conv2.b": "mask_decoder.output_upscaling.3.bias",
    }
    for i in range(meta["depth"]):
        enc = f"image_encoder.blocks.{i}"
        out.update({
            f"enc.b{i}.ln1.w": f"{enc}.norm1.weight",
            f"enc.b{i}.ln1.b": f"{enc}.norm1.bias",
            f"enc.b{i}.qkv.w": f"{enc}.attn.qkv.weight",
            f"enc.b{i}.qkv.b": f"{enc}.attn.qkv.bias",
            f"enc.b{i}.rel_h": f"{enc}.attn.rel_pos_h",
            f"enc.b{i}.rel_w": f"{enc}.attn.rel_pos_w",
            f"enc.b{i}.proj.w": f"{enc}.attn.proj.weight",
            f"enc.b{i}.proj.b": f"{enc}.attn.proj.bias",
            f"enc.b{i}.ln2.w": f"{enc}.norm2.weight",
            f"enc.b{i}.ln2.b": f"{enc}.norm2.bias",
            f"enc.b{i}.mlp.fc1.w": f"{enc}.mlp.lin1.weight",
            f"enc.b{i}.mlp.fc1.b": f"{enc}.mlp.lin1.bias",
            f"enc.b{i}.mlp.fc2.w": f"{enc}.mlp.lin2.weight",
            f"enc.b{i}.mlp.fc2.b": f"{enc}.mlp.lin2.bias",
        })
    for layer in range(2):
        dec = f"mask_decoder.transformer.layers.{layer}"
        pairs = {
            "self": "self_attn",
            "t2i": "cross_attn_token_to_image",
            "i2t": "cross_attn_image_to_token",
        }
        for ours, theirs in pairs.items():
            for proj in ("q", "k", "v", "out"):
                out[f"dec.layer{layer}.{ours}.{proj}.w"] = f"{dec}.{theirs}.{proj}_proj.weight"
                out[f"dec.layer{layer}.{ours}.{proj}.b"] = f"{dec}.{theirs}.{proj}_proj.bias"
        for n in range(1, 5):
            out[f"dec.layer{layer}.norm{n}.w"] = f"{dec}.norm{n}.weight"
            out[f"dec.layer{layer}.norm{n}.b"] = f"{dec}.norm{n}.bias"
        out[f"dec.layer{layer}.mlp.0.w"] = f"{dec}.mlp.lin1.weight"
        out[f"dec.layer{layer}.mlp.0.b"] = f"{dec}.mlp.lin1.bias"
        out[f"dec.layer{layer}.mlp.1.w"] = f"{dec}.mlp.lin2.weight"
        out[f"dec.layer{layer}.mlp.1.b"] = f"{dec}.mlp.lin2.bias"
    for proj in ("q", "k", "v", "out"):
        out[f"dec.final_t2i.{proj}.w"] = \
            f"mask_decoder.transformer.final_attn_token_to_image.{proj}_proj.weight"
        out[f"dec.final_t2i.{proj}.b"] = \
            f"mask_decoder.transformer.final_attn_token_to_image.{proj}_proj.bias"
    for t in range(meta["decoder"]["num_mask_tokens"]):
        for li in range(3):
            out[f"dec.hyper{t}.{li}.w"] = \
                f"mask_decoder.output_hypernetworks_mlps.{t}.layers.{li}.weight"
            out[f"dec.hyper{t}.{li}.b"] = \
                f"mask_decoder.output_hypernetworks_mlps.{t}.layers.{li}.bias"
    for li in range(3):
        out[f"dec.iou_head.{li}.w"] = f"mask_decoder.iou_prediction_head.layers.{li}.weight"
        out[f"dec.iou_head.{li}.b"] = f"mask_decoder.iou_prediction_head.layers.{li}.bias"
    return out


def reshape_for_gsw(name: str, tensor):
    # pos_embed is stored [1, H, W, C] upstream; GSW wants [H, W, C].
    if name == "enc.pos_embed":
        return tensor.squeeze(0)
    # Single-row embeddings [1, C] -> [C].
    if name.startswith("prompt.") and tensor.dim() == 2 and tensor.shape[0] == 1:
        return tensor.squeeze(0)
    if name == "dec.iou_token":
        return tensor.squeeze(0)
    return tensor


def write_gsw(path: str, meta: dict, tensors: dict) -> None:
    import numpy as np

    meta_bytes = json.dumps(meta).encode("utf-8")
    with open(path, "wb") as f:
        f.write(b"GSW1")
        f.write(struct.pack("<I", len(meta_bytes)))
        f.write(meta_bytes)
        f.write(struct.pack("<I", len(tensors)))
        for name, tensor in tensors.items():
            if hasattr(tensor, "detach"):  # torch tensor
                tensor = tensor.detach().to("cpu").float().contiguous().numpy()
            data = np.ascontiguousarray(tensor, dtype=np.float32)
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", data.ndim))
            for d in data.shape:
                f.write(struct.pack("<I", d))
            f.write(data.tobytes())


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("checkpoint", help="segment-anything .pth checkpoint")
    parser.add_argument("output", help="output .gsw path")
    parser.add_argument("--model", choices=sorted(ARCH), default="vit_h")
    args = parser.parse_args()

    import torch  # deferred so --help works without torch

    state = torch.load(args.checkpoint, map_location="cpu")
    if "model" in state and isinstance(state["model"], dict):
        state = state["model"]

    meta = build_meta(args.model)
    mapping = tensor_map(meta)
    missing = [key for key in mapping.values() if key not in state]
    if missing:
        print(f"checkpoint is missing {len(missing)} expected keys, e.g. {missing[:4]}",
              file=sys.stderr)
        return 1

    tensors = {ours: reshape_for_gsw(ours, state[theirs]) for ours, theirs in mapping.items()}
    write_gsw(args.output, meta, tensors)
    total = sum(t.numel() for t in tensors.values())
    print(f"wrote {args.output}: {len(tensors)} tensors, {total / 1e6:.1f}M parameters")
    return 0


if __name__ == "__main__":
    sys.exit(main())
