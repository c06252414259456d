"""Train the best sixteen-qubit model on a slice of the zeros-versus-ones task.

The MNIST files are read from $QCNN_FORGE_DATA (or ./data).  Gradients come
from forward finite differences and the update is Adam.  The run below uses
40 batches instead of the full 200 so it finishes in about half a minute.
"""

from qcnn_forge.data import load_mnist, prepare
from qcnn_forge.models import named_model, regular_forward
from qcnn_forge.training import BsocSpec, TrainConfig, train

ds = prepare(load_mnist(), "0v1", max_train_per_class=200, max_test_per_class=50)
model = named_model("regular-16q-best")
print(f"{model.name}: {model.num_params} parameters, {len(ds.train_labels)} training images")


def forward(images, weights):
    return regular_forward(model, images, weights)


run = train(forward, model.num_params, ds.train_images, ds.train_labels, ds.test_images, ds.test_labels,
            TrainConfig(num_batches=40, eval_every=10), BsocSpec(2))
for point in run.history:
    print(f"batch {point.batch:3d}: test loss {point.loss:.3f}, accuracy {point.accuracy:.1f}%")
