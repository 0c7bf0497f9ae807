result = np.dot(matrix, vector)
norm = np.linalg.norm(result)
if norm > 0:
    result = result / norm
print(result.shape)
