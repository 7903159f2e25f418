"""Backbone construction, selective unfreezing, and parameter accounting."""
from __future__ import annotations

import numpy as np

from .spec import UNFREEZE_DEPTHS, AugmentationSpec, ExportSpec


def _backbone(name: str, image_size: int, pretrained: bool):
    from tensorflow import keras

    builders = {
        "mobilenetv2": keras.applications.MobileNetV2,
        "nasnetmobile": keras.applications.NASNetMobile,
        "inceptionv3": keras.applications.InceptionV3,
    }
    return builders[name](
        input_shape=(image_size, image_size, 3),
        include_top=False,
        weights="imagenet" if pretrained else None,
    )


def _augmentation_layers(aug: AugmentationSpec):
    from tensorflow import keras

    layers = []
    if aug.flip:
        layers.append(keras.layers.RandomFlip("horizontal_and_vertical"))
    if aug.rotation:
        layers.append(keras.layers.RandomRotation(0.2))
    if aug.zoom:
        layers.append(keras.layers.RandomZoom(0.2))
    if aug.contrast:
        layers.append(keras.layers.RandomContrast(0.2))
    return layers


def build_classifier(name: str, num_classes: int, spec: ExportSpec):
    """Frozen backbone with the trailing layers unfrozen, GAP + softmax head.

    Augmentation layers sit inside the model, so they are active only in
    training. Pixel inputs are expected in [0, 1].
    """
    from tensorflow import keras

    base = _backbone(name, spec.image_size, spec.pretrained)
    base.trainable = False
    for layer in base.layers[-UNFREEZE_DEPTHS[name]:]:
        layer.trainable = True

    inputs = keras.Input(shape=(spec.image_size, spec.image_size, 3))
    x = inputs
    for layer in _augmentation_layers(spec.augmentation):
        x = layer(x)
    x = base(x)
    x = keras.layers.GlobalAveragePooling2D()(x)
    outputs = keras.layers.Dense(num_classes, activation="softmax")(x)
    model = keras.Model(inputs, outputs, name=name)
    model.compile(
        optimizer=keras.optimizers.Adam(),
        loss="sparse_categorical_crossentropy",
        metrics=["accuracy"],
    )
    return model


def trainable_layer_shapes(model) -> list[tuple[int, ...]]:
    return [tuple(int(d) for d in w.shape) for w in model.trainable_weights]


def trainable_param_count(model) -> int:
    return int(sum(int(np.prod(shape)) for shape in trainable_layer_shapes(model)))
